#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qdiss/bath.hpp"

namespace qdiss {

// Half-line Fourier transforms of decay profiles.
//
// Every rate constant and dissipative potential in the model reduces to the
// primitive
//
//   A(nu) = int_0^T exp(-G(t)) exp(-i nu t) dt,
//
// where G is a weighted combination of line broadening functions. Energy
// gaps, reorganization shifts, probe frequencies, thermal occupation factors
// and static disorder offsets all enter through the argument nu, so one
// profile serves a whole family of integrals.

// Thermal occupation n(w) = 1 / (e^{beta w} - 1).
inline double bose_occupation(double beta, double omega) {
    return 1.0 / std::expm1(beta * omega);
}

struct ProfileTerm {
    double weight;
    LineBroadeningBuilder* g;
};

struct DecayProfile {
    double dt = 0.0;
    std::vector<std::complex<double>> phi;  // exp(-G(t_k))
    bool truncated = false;  // stopped early because the profile support died
    double t_span = 0.0;     // formal integration horizon
    double tail_ratio = 0.0; // |phi(T)| / max_k |phi|, 0 when truncated early
};

// Tabulates exp(-G(t)) with G(t) = sum_i weight_i g_i(t), growing the
// underlying line broadening tables only as far as the profile stays alive.
// Profiles that decay below support_cutoff are cut there; the dropped tail
// changes any transform by less than cutoff * T, far below every tolerance
// used downstream.
DecayProfile build_decay_profile(const std::vector<ProfileTerm>& terms, double t_span,
                                 double support_cutoff = 1e-22);

// Trapezoid evaluation of A(nu) over the tabulated support. Endpoint weights
// follow the trapezoid rule on the full horizon; when the profile was
// truncated the final half weight is immaterial.
std::complex<double> half_fourier(const DecayProfile& p, double nu);

// FFT-backed table of A(nu) on a uniform frequency window, with the analytic
// derivative stored alongside for cubic Hermite interpolation between bins.
// Used on the per-mode paths where A is needed at thousands of arguments per
// trajectory.
class SpectrumTable {
public:
    SpectrumTable(const DecayProfile& p, double nu_min, double nu_max);

    std::complex<double> operator()(double nu) const;

    double nu_lo() const { return nu0_; }
    double nu_hi() const { return nu0_ + dnu_ * static_cast<double>(val_.size() - 1); }

private:
    double nu0_ = 0.0;
    double dnu_ = 0.0;
    std::vector<std::complex<double>> val_;
    std::vector<std::complex<double>> der_;
};

}  // namespace qdiss
