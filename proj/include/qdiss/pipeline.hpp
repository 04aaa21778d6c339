#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdiss/config.hpp"
#include "qdiss/dissipation.hpp"
#include "qdiss/heom.hpp"

namespace qdiss {

// End-to-end run engines. run_mqme covers the rate-equation pipeline (bare or
// disorder-averaged, density or per-mode decomposition); run_heom covers the
// reference hierarchy propagation with optional probe frequency scans.

struct RateSummary {
    double k21 = 0.0, k12 = 0.0, kappa = 0.0, p1_inf = 0.0;
    double b21 = 0.0, b12 = 0.0;
};

struct ConservationCheck {
    bool checked = false;
    double integral = 0.0;  // sum over channels of int E_inf(w) dw on the grid
    double expected = 0.0;  // delta_e * (p1(0) - p1(inf))
    double rel_err = 0.0;
};

struct MqmeOutputs {
    std::vector<double> t;
    std::vector<std::vector<double>> p;  // mean populations per state
    std::vector<double> sigma_z;
    DissipationGrid grid;                // channel count: 2 for the dimer, 1 otherwise
    std::vector<double> e_inf_se;        // per frequency; empty for bare runs
    RateSummary rates;                   // of the undisordered system
    ConservationCheck conservation;
    double sigma_shift = 0.0;            // static disorder width actually used
    double lambda_fast = 0.0;            // dynamical reorganization energy after splitting
    double t_sim = 0.0;
    double out_step = 0.0;
    std::vector<std::string> warnings;
    nlohmann::json manifest;
};

MqmeOutputs run_mqme(const RunConfig& cfg);

struct HeomRunOutputs {
    HeomResult pops;  // propagation without the probe
    std::optional<ProbeScanResult> scan;
    int channel = 0;  // probed site (0-based) when a scan ran
    nlohmann::json manifest;
};

HeomRunOutputs run_heom(const RunConfig& cfg);

void write_mqme_outputs(const std::string& dir, const MqmeOutputs& out);
void write_heom_outputs(const std::string& dir, const HeomRunOutputs& out);

// Dispatches on the configured method, writes all output files into dir and
// prints a short run summary to stdout.
void execute_run(const RunConfig& cfg, const std::string& dir);

}  // namespace qdiss
