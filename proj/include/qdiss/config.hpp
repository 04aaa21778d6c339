#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdiss/bath.hpp"
#include "qdiss/mqme.hpp"
#include "qdiss/tss.hpp"

namespace qdiss {

enum class ModelKind { Dimer, SpinBoson };
enum class Method { Density, PerMode, Heom };

const char* to_string(ModelKind m);
const char* to_string(Method m);
const char* to_string(DisorderTopology t);
const char* to_string(SigmaMode m);

struct RefineBand {
    double min = 0.0;
    double max = 0.0;
    double step = 0.0;
};

struct DisorderConfig {
    bool enabled = false;
    double eta = 0.99;
    double omega_star = 0.2;
    std::size_t n_traj = 1000;
    DisorderTopology topology = DisorderTopology::IndependentPerState;
    SigmaMode sigma_mode = SigmaMode::Verbatim;
};

// Benchmark propagation settings; only meaningful with method "heom".
struct HeomConfig {
    bool present = false;
    std::size_t n_hier = 7;
    std::size_t n_matsu = 30;
    std::size_t n_full_matsu = 3;
    double dt_max = 0.1;
    double rel_tol = 1e-8;
    double t_sim = 100.0;
    double out_step = 0.1;
    double s_bp = 1e-5;
    int channel = 0;
    std::vector<double> probe_omegas;
    double stationarity_tol = 1e-4;
    double memory_cap_gb = 4.0;
    bool stiff_exponential = true;
    double stiff_threshold = 2.0;
};

struct RunConfig {
    std::string name = "run";
    ModelKind model = ModelKind::Dimer;
    SpectralDensity bath;
    double temperature = 1.0;
    double coupling = 0.25;
    double delta_e = 0.0;

    std::size_t n_modes = 2000;
    double omega_max_modes = 15.0;

    double grid_min = 0.01;
    double grid_max = 8.0;
    double grid_step = 0.01;
    std::vector<RefineBand> refine;

    QuadratureSpec quad;
    Method method = Method::Density;
    DisorderConfig disorder;

    std::uint64_t seed = 1;
    double t_sim = 0.0;  // 0: choose from the relaxation rate
    double out_step = 0.05;
    int workers = 0;  // 0: environment override or serial

    HeomConfig heom;

    double beta() const { return 1.0 / temperature; }
    std::vector<double> omega_grid() const;
};

// Parse a config document, filling model-dependent defaults and rejecting
// unknown keys by their full path. `name` seeds RunConfig::name when the
// document does not carry one.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& name);
RunConfig load_config_file(const std::string& path);

// Full echo of a resolved configuration, for manifests.
nlohmann::json resolved_json(const RunConfig& cfg);

// Compiled-in configurations.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
RunConfig preset(const std::string& name);

}  // namespace qdiss
