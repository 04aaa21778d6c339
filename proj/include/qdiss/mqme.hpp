#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "qdiss/spectrum.hpp"

namespace qdiss {

// Second order rate kernel machinery. A rate constant between subsystem
// states A and B coupled by a matrix element V with energy offset
// b = E_B - E_A + (reorganization shifts) is
//
//   K_{B<-A} = 2 |V|^2 Re A(b)
//
// with A(nu) the half-line transform of the pair's decay profile.

struct QuadratureSpec {
    double dt = 0.01;       // integration step of the half-line transforms
    double t_max = 5000.0;  // integration horizon
    double tail_tol = 1e-4; // warn when the integrand is still this large at t_max
};

struct RateResult {
    double k = 0.0;
    double tail_ratio = 0.0;  // |integrand(t_max)| / max, 0 if fully decayed
    bool tail_warning = false;
};

RateResult rate_from_profile(const DecayProfile& p, double v, double b, double tail_tol);

// Pairwise rates of an N-state network. k(dest, src) is the transfer rate
// from src to dest; the diagonal is zero.
struct RateMatrix {
    Eigen::MatrixXd k;

    explicit RateMatrix(std::size_t n) : k(Eigen::MatrixXd::Zero(n, n)) {}
    std::size_t size() const { return static_cast<std::size_t>(k.rows()); }

    // Population generator G = k - diag(column sums); columns sum to zero
    // exactly because the diagonal is assembled from the same additions.
    Eigen::MatrixXd generator() const;
};

// Stationary distribution as the one dimensional kernel of the generator.
// Throws PhysicsError when the kernel is degenerate (disconnected network)
// or leaves the simplex.
std::vector<double> steady_state(const RateMatrix& rates);

struct PopulationTrajectory {
    double dt = 0.0;  // sample spacing of the recorded lattice
    std::vector<std::vector<double>> p;  // p[state][sample]

    std::size_t n_states() const { return p.size(); }
    std::size_t n_samples() const { return p.empty() ? 0 : p.front().size(); }
    double t_final() const { return n_samples() ? dt * static_cast<double>(n_samples() - 1) : 0.0; }
    // Population difference p1 - p2, defined for two state systems.
    std::vector<double> sigma_z() const;
};

// Classical RK4 on dp/dt = G p with fixed step dt, recorded every `stride`
// steps. Conservation of sum(p) and positivity are checked along the way.
PopulationTrajectory propagate_populations(const RateMatrix& rates,
                                           const std::vector<double>& p0, double dt,
                                           double t_sim, std::size_t stride);

// Closed form for a two state network: p1(t) relaxes exponentially toward
// k12 / (k12 + k21) at total rate k12 + k21.
std::vector<double> analytic_two_level_p1(double k12, double k21, double p1_0, double dt,
                                          std::size_t n_samples);

}  // namespace qdiss
