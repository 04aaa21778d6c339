#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdiss/bath.hpp"

namespace qdiss {

// Numerically exact reference propagation for a two-site subsystem with
// local Drude-Lorentz baths, via a scaled hierarchy of auxiliary density
// matrices, optionally extended by one explicit probe oscillator whose
// energy uptake resolves the dissipation spectrum.

// Exponential decomposition of the bath correlation function
//   C(t) = int_0^inf J(w) [coth(beta w / 2) cos wt - i sin wt] dw
//        = sum_k c_k exp(-nu_k t),
// with the Drude pole first and n_matsu Matsubara terms after it.
struct ExpDecomposition {
    std::vector<std::complex<double>> c;
    std::vector<double> nu;
};

ExpDecomposition drude_matsubara(double lambda, double omega_c, double beta,
                                 std::size_t n_matsu);

// Smallest oscillator truncation whose thermal ladder covers the requested
// probability mass: 1 - exp(-beta w n) >= coverage.
std::size_t boltzmann_levels(double beta, double omega, double coverage);

struct ProbeSpec {
    double omega = 0.0;      // probe frequency
    double s_bp = 1e-5;      // Huang-Rhys factor of the probe coupling
    int channel = 0;         // site whose population displaces the probe (0-based)
    std::size_t n_levels = 0;  // explicit truncation; 0 derives it from coverage
    double coverage = 0.999;
};

struct HeomParams {
    double beta = 1.0;
    std::size_t n_hier = 7;       // tier cap of the dense hierarchy
    std::size_t n_matsu = 30;     // Matsubara terms per channel
    std::size_t n_full_matsu = 3; // Matsubara terms allowed into the dense set;
                                  // the rest couple only as single-quantum rows
    double dt_max = 0.1;
    double rel_tol = 1e-8;        // step controller tolerance on the populations
    double t_sim = 100.0;
    double out_step = 0.1;
    bool stiff_exponential = true;  // integrate fast-decaying rows by closed form
    double stiff_threshold = 2.0;   // gamma * dt_max above which a row is "fast"
    double memory_cap_gb = 4.0;
};

struct HeomModel {
    double e1 = 0.0, e2 = 0.0;  // bare site energies
    double v = 0.0;             // electronic coupling
    double lambda = 0.0;        // per-site bath reorganization energy
    double omega_c = 0.0;       // per-site bath cutoff
    std::optional<ProbeSpec> probe;
};

struct HeomResult {
    double out_step = 0.0;
    std::vector<double> t;
    std::vector<double> p1, p2;
    std::vector<double> trace_err;     // |Tr rho - 1| at the samples
    std::vector<double> probe_energy;  // Tr[H_probe (rho(t) - rho(0))], probe runs
    std::size_t n_adm = 0;      // hierarchy rows integrated (including fast rows)
    std::size_t dim = 0;        // one-row matrix dimension
    std::size_t n_levels = 0;   // probe truncation actually used
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    double min_dt = 0.0;
};

HeomResult propagate_heom(const HeomModel& model, const HeomParams& par);

// Removes the residual linear drift of a steady probe-energy signal. The
// populations must already be stationary over the fit window (final fifth of
// the run); otherwise the reading is refused.
struct DriftCorrected {
    std::vector<double> e;  // corrected samples
    double slope = 0.0;     // removed drift per unit time
    double e_steady = 0.0;  // corrected final value
};

DriftCorrected drift_correct(const std::vector<double>& e, const std::vector<double>& p1,
                             double dt, double stationarity_tol);

// One probe frequency of a dissipation scan.
struct ProbeScanRow {
    double omega = 0.0;
    std::size_t n_levels = 0;
    bool ok = false;
    std::string error;
    double e_steady = 0.0;  // E(w, t -> inf), spectral density converted
    double slope = 0.0;     // removed drift
    std::vector<double> e_t;  // corrected E(w, t)
    std::vector<double> d_t;  // centered finite difference of e_t
};

struct ProbeScanResult {
    double out_step = 0.0;
    std::vector<double> t;
    std::vector<ProbeScanRow> rows;
};

// Runs one probe propagation per frequency and converts the probe energy
// uptake into the bath dissipation spectrum through
// E(w, t) = J(w) / (w^2 s_bp) * probe_energy(t). Failures are recorded per
// frequency and do not abort the scan.
ProbeScanResult probe_scan(const HeomModel& base, const HeomParams& par,
                           const SpectralDensity& j, const std::vector<double>& omegas,
                           double stationarity_tol);

}  // namespace qdiss
