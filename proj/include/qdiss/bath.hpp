#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace qdiss {

// Harmonic bath descriptions. Everything runs in reduced units with
// hbar = k_B = 1, so frequencies, energies and inverse temperatures share one
// scale.

enum class BsdKind { DrudeLorentz, Brownian };

// Bath spectral density J(omega) on omega >= 0.
//
//   Drude-Lorentz: J(w) = (2 Lambda / pi) * w_c w / (w^2 + w_c^2)
//   Brownian:      J(w) = (2 Lambda gamma / pi) * 2 w_0^2 w
//                         / ((w^2 - w_0^2)^2 + 4 gamma^2 w^2)
//
// Lambda is the total reorganization energy, Lambda = int_0^inf J(w)/w dw,
// for both forms.
struct SpectralDensity {
    BsdKind kind = BsdKind::DrudeLorentz;
    double lambda = 0.0;
    double omega_c = 0.0;  // Drude-Lorentz cutoff
    double omega_0 = 0.0;  // Brownian peak frequency
    double gamma = 0.0;    // Brownian damping

    // J(omega); throws std::domain_error for omega < 0.
    double operator()(double omega) const;
};

SpectralDensity drude_lorentz(double lambda, double omega_c);
SpectralDensity brownian(double lambda, double omega_0, double gamma);

// int_0^{omega_max} J(w)/w dw by adaptive quadrature. omega_max may be
// infinity; the Drude-Lorentz integral over the full half line is returned
// analytically as Lambda.
double reorganization_energy(const SpectralDensity& j, double omega_max);

// coth(x) for x > 0 with a series branch near zero, where the naive form
// loses digits to cancellation.
inline double coth(double x) {
    if (x < 1e-4) return 1.0 / x + x / 3.0;
    return 1.0 / std::tanh(x);
}

// Finite mode decomposition J(w) ~ sum_j lambda_j w_j delta(w - w_j).
// Frequencies are strictly increasing and weights non-negative. The
// displacement of mode j is d_j = sqrt(2 lambda_j / w_j^2).
struct DiscretizedBath {
    std::vector<double> omega;
    std::vector<double> lambda;

    std::size_t size() const { return omega.size(); }
    double total_lambda() const;
};

// Quadratically spaced grid w_j = (j/N)^2 w_max with density weights
// lambda_j = J(w_j) / (w_j f(w_j)), f(w) = N / (2 sqrt(w w_max)). Used
// directly for Drude-Lorentz and as the fallback for overdamped Brownian
// baths.
DiscretizedBath discretize_quadratic(const SpectralDensity& j, std::size_t n_modes,
                                     double omega_max);

// Brownian baths with an underdamped peak at Omega = sqrt(w_0^2 - 2 gamma^2)
// get two windows, [0, Omega) and (Omega, w_max], each carrying half of the
// modes with quadratic clustering toward Omega, plus one mode pinned at Omega
// whose weight is the exact bin mass of J/w around the peak. If Omega = 0 the
// quadratic scheme is used as-is.
DiscretizedBath discretize_brownian(const SpectralDensity& j, std::size_t n_modes,
                                    double omega_max);

// Dispatch on the spectral density kind. Throws ConfigError for unusable
// parameter combinations and PhysicsError if the discrete weights fail the
// sum rule sum_j lambda_j ~ int_0^{w_max} J/w dw within 2%.
DiscretizedBath discretize(const SpectralDensity& j, std::size_t n_modes,
                           double omega_max);

// Line broadening function of a discrete bath at inverse temperature beta,
//
//   g(t) = sum_j s_j [ coth(beta w_j / 2)(1 - cos w_j t)
//                      + i (sin w_j t - w_j t) ],   s_j = lambda_j / w_j,
//
// tabulated on t_k = k dt. The builder grows the table on demand: decay
// profiles usually die long before the formal integration horizon, and the
// per-mode phase state is checkpointed so an extension continues the exact
// same sequence it would have produced in one pass.
class LineBroadeningBuilder {
public:
    LineBroadeningBuilder(const DiscretizedBath& bath, double beta, double dt);

    // Extends the table to cover at least n_points entries (t up to
    // (n_points-1) dt).
    void ensure(std::size_t n_points);

    double dt() const { return dt_; }
    std::size_t size() const { return g_.size(); }
    const std::vector<std::complex<double>>& table() const { return g_; }

    // Sum of mode reorganization energies; -Im g(t)/t approaches this as the
    // oscillatory terms average out.
    double total_lambda() const { return total_lambda_; }

private:
    double dt_;
    double total_lambda_;
    std::vector<double> s_;      // Huang-Rhys factors lambda_j / w_j
    std::vector<double> cth_;    // coth(beta w_j / 2)
    std::vector<double> om_;
    std::vector<std::complex<double>> rot_;   // e^{i w_j dt}
    std::vector<std::complex<double>> z_;     // e^{i w_j t_n}, next point to emit
    std::vector<std::complex<double>> g_;
};

// One-shot table for callers that know the span they need.
std::vector<std::complex<double>> line_broadening(const DiscretizedBath& bath,
                                                  double beta, double dt,
                                                  std::size_t n_points);

// Time scale separation splitting. The slow weight
//
//   S(w) = eta (1 - (w / w_star)^2)^2   for w < w_star, else 0
//
// moves a fraction of each mode's coupling into a statically disordered slow
// bath; the remainder (1 - S) stays dynamical.
double slow_weight(double omega, double omega_star, double eta);

enum class SigmaMode {
    Verbatim,  // sigma = sum_j S(w_j) lambda_j w_j coth(beta w_j / 2)
    Sqrt,      // square root of the same sum
};

struct TssSplit {
    DiscretizedBath fast;   // residual dynamical bath, weights (1-S) lambda_j
    double slow_lambda = 0.0;  // reorganization energy moved to the slow bath
    double sigma = 0.0;        // standard deviation of the static energy shifts
};

TssSplit split_time_scales(const DiscretizedBath& bath, double beta,
                           double omega_star, double eta, SigmaMode mode);

}  // namespace qdiss
