#include "qdiss/bath.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qdiss/errors.hpp"

namespace qdiss {

double SpectralDensity::operator()(double omega) const {
    if (omega < 0.0) throw std::domain_error("spectral density evaluated at omega < 0");
    switch (kind) {
        case BsdKind::DrudeLorentz:
            return (2.0 * lambda / M_PI) * omega_c * omega / (omega * omega + omega_c * omega_c);
        case BsdKind::Brownian: {
            const double w2 = omega * omega;
            const double d = w2 - omega_0 * omega_0;
            return (2.0 * lambda * gamma / M_PI) * 2.0 * omega_0 * omega_0 * omega
                   / (d * d + 4.0 * gamma * gamma * w2);
        }
    }
    return 0.0;
}

SpectralDensity drude_lorentz(double lambda, double omega_c) {
    if (lambda < 0.0 || omega_c <= 0.0)
        throw ConfigError("drude_lorentz requires lambda >= 0 and omega_c > 0");
    SpectralDensity j;
    j.kind = BsdKind::DrudeLorentz;
    j.lambda = lambda;
    j.omega_c = omega_c;
    return j;
}

SpectralDensity brownian(double lambda, double omega_0, double gamma) {
    if (lambda < 0.0 || omega_0 <= 0.0 || gamma <= 0.0)
        throw ConfigError("brownian requires lambda >= 0, omega_0 > 0 and gamma > 0");
    SpectralDensity j;
    j.kind = BsdKind::Brownian;
    j.lambda = lambda;
    j.omega_0 = omega_0;
    j.gamma = gamma;
    return j;
}

namespace {

// J(w)/w with the analytic w -> 0 limit, which is finite for both forms.
double density_over_omega(const SpectralDensity& j, double omega) {
    if (omega == 0.0) {
        if (j.kind == BsdKind::DrudeLorentz) return 2.0 * j.lambda / (M_PI * j.omega_c);
        return 4.0 * j.lambda * j.gamma / (M_PI * j.omega_0 * j.omega_0);
    }
    return j(omega) / omega;
}

}  // namespace

double reorganization_energy(const SpectralDensity& j, double omega_max) {
    if (omega_max <= 0.0) throw ConfigError("reorganization_energy requires omega_max > 0");
    if (std::isinf(omega_max) && j.kind == BsdKind::DrudeLorentz) return j.lambda;
    auto f = [&](double w) { return density_over_omega(j, w); };
    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    return quad::integrate(f, 0.0, omega_max, 12, 1e-10);
}

double DiscretizedBath::total_lambda() const {
    double s = 0.0;
    for (double l : lambda) s += l;
    return s;
}

DiscretizedBath discretize_quadratic(const SpectralDensity& j, std::size_t n_modes,
                                     double omega_max) {
    if (n_modes == 0) throw ConfigError("discretization requires at least one mode");
    if (omega_max <= 0.0 || std::isinf(omega_max))
        throw ConfigError("discretization requires a finite omega_max > 0");
    DiscretizedBath b;
    b.omega.reserve(n_modes);
    b.lambda.reserve(n_modes);
    const double n = static_cast<double>(n_modes);
    for (std::size_t k = 1; k <= n_modes; ++k) {
        const double jj = static_cast<double>(k);
        const double w = (jj * jj) / (n * n) * omega_max;
        // lambda_j = J(w_j) / (w_j f(w_j)) with mode density f = N / (2 sqrt(w w_max)),
        // the inverse spacing of the quadratic grid.
        const double l = j(w) * 2.0 * std::sqrt(w * omega_max) / (n * w);
        b.omega.push_back(w);
        b.lambda.push_back(l);
    }
    return b;
}

DiscretizedBath discretize_brownian(const SpectralDensity& j, std::size_t n_modes,
                                    double omega_max) {
    if (j.kind != BsdKind::Brownian)
        throw ConfigError("discretize_brownian requires a Brownian spectral density");
    if (omega_max <= 0.0 || std::isinf(omega_max))
        throw ConfigError("discretization requires a finite omega_max > 0");
    if (j.omega_0 >= omega_max)
        throw ConfigError("Brownian discretization requires omega_0 < omega_max");

    const double om2 = j.omega_0 * j.omega_0 - 2.0 * j.gamma * j.gamma;
    if (om2 <= 0.0) {
        // Overdamped: J/w peaks at zero frequency, the quadratic grid already
        // concentrates modes there.
        return discretize_quadratic(j, n_modes, omega_max);
    }
    const double peak = std::sqrt(om2);
    if (n_modes < 4 || n_modes % 2 != 0)
        throw ConfigError("underdamped Brownian discretization needs an even mode count >= 4");

    DiscretizedBath b;
    b.omega.reserve(n_modes);
    b.lambda.reserve(n_modes);
    const double n = static_cast<double>(n_modes);

    // Window [0, peak): quadratic clustering toward the peak. The weights are
    // bin masses of J/w, lambda = J(w) dw/dj evaluated on the grid.
    for (std::size_t k = 1; k <= n_modes / 2 - 1; ++k) {
        const double u = 1.0 - 2.0 * static_cast<double>(k) / n;
        const double w = (1.0 - u * u) * peak;
        const double l = 4.0 * j(w) * std::sqrt((peak - w) * peak) / (n * w);
        b.omega.push_back(w);
        b.lambda.push_back(l);
    }

    // One mode pinned at the peak itself, carrying the exact local bin mass.
    // For J Brownian this evaluates in closed form.
    {
        const double l = (2.0 * j.lambda / (M_PI * n * n)) * omega_max * j.omega_0 * j.omega_0
                         / (j.gamma * (j.omega_0 * j.omega_0 - j.gamma * j.gamma));
        b.omega.push_back(peak);
        b.lambda.push_back(l);
    }

    // Window (peak, omega_max]: mirrored quadratic clustering.
    for (std::size_t k = 1; k <= n_modes / 2; ++k) {
        const double jj = static_cast<double>(k);
        const double w = peak + 4.0 * jj * jj / (n * n) * (omega_max - peak);
        const double l = 4.0 * j(w) * std::sqrt((w - peak) * (omega_max - peak)) / (n * w);
        b.omega.push_back(w);
        b.lambda.push_back(l);
    }
    return b;
}

DiscretizedBath discretize(const SpectralDensity& j, std::size_t n_modes, double omega_max) {
    DiscretizedBath b = (j.kind == BsdKind::Brownian)
                            ? discretize_brownian(j, n_modes, omega_max)
                            : discretize_quadratic(j, n_modes, omega_max);
    // The weights are bin masses of J/w, so their sum must reproduce the
    // reorganization energy inside the window. A large mismatch means the
    // mode count cannot resolve the density structure.
    const double want = reorganization_energy(j, omega_max);
    const double got = b.total_lambda();
    if (want > 0.0 && std::abs(got - want) > 0.02 * want) {
        std::ostringstream msg;
        msg << "bath discretization failed the reorganization sum rule: "
            << "sum lambda_j = " << got << " vs integral " << want
            << " over [0, " << omega_max << "] (rel. error "
            << std::abs(got - want) / want << ", tolerance 0.02); "
            << "increase n_modes or adjust omega_max";
        throw PhysicsError(msg.str());
    }
    return b;
}

LineBroadeningBuilder::LineBroadeningBuilder(const DiscretizedBath& bath, double beta,
                                             double dt)
    : dt_(dt), total_lambda_(bath.total_lambda()) {
    if (beta <= 0.0) throw ConfigError("line broadening requires beta > 0");
    if (dt <= 0.0) throw ConfigError("line broadening requires dt > 0");
    const std::size_t m = bath.size();
    s_.resize(m);
    cth_.resize(m);
    om_.resize(m);
    rot_.resize(m);
    z_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = bath.omega[i];
        om_[i] = w;
        s_[i] = bath.lambda[i] / w;
        cth_[i] = coth(0.5 * beta * w);
        rot_[i] = std::polar(1.0, w * dt);
        z_[i] = {1.0, 0.0};
    }
}

void LineBroadeningBuilder::ensure(std::size_t n_points) {
    if (n_points <= g_.size()) return;
    const std::size_t lo = g_.size();
    g_.resize(n_points, {0.0, 0.0});

    // Time-chunked so the active slice of g stays cache resident while the
    // mode loop streams over it.
    constexpr std::size_t kChunk = 8192;
    const std::size_t m = om_.size();
    for (std::size_t c0 = lo; c0 < n_points; c0 += kChunk) {
        const std::size_t c1 = std::min(n_points, c0 + kChunk);
        for (std::size_t i = 0; i < m; ++i) {
            const double s = s_[i];
            const double sc = s * cth_[i];
            const double w = om_[i];
            const std::complex<double> rot = rot_[i];
            std::complex<double> z = z_[i];
            for (std::size_t k = c0; k < c1; ++k) {
                // Periodic re-seed pinned to the absolute index, so the
                // sequence does not depend on how the table was segmented.
                if ((k & 4095u) == 0u) z = std::polar(1.0, w * (static_cast<double>(k) * dt_));
                const double t = static_cast<double>(k) * dt_;
                g_[k] += std::complex<double>(sc * (1.0 - z.real()), s * (z.imag() - w * t));
                z *= rot;
            }
            z_[i] = z;
        }
    }
}

std::vector<std::complex<double>> line_broadening(const DiscretizedBath& bath, double beta,
                                                  double dt, std::size_t n_points) {
    LineBroadeningBuilder b(bath, beta, dt);
    b.ensure(n_points);
    return b.table();
}

double slow_weight(double omega, double omega_star, double eta) {
    if (omega >= omega_star) return 0.0;
    const double r = omega / omega_star;
    const double u = 1.0 - r * r;
    return eta * u * u;
}

TssSplit split_time_scales(const DiscretizedBath& bath, double beta, double omega_star,
                           double eta, SigmaMode mode) {
    if (eta < 0.0 || eta > 1.0) throw ConfigError("time scale separation requires 0 <= eta <= 1");
    if (omega_star <= 0.0) throw ConfigError("time scale separation requires omega_star > 0");
    if (beta <= 0.0) throw ConfigError("time scale separation requires beta > 0");
    TssSplit out;
    out.fast.omega = bath.omega;
    out.fast.lambda.resize(bath.size());
    double var = 0.0;
    for (std::size_t i = 0; i < bath.size(); ++i) {
        const double s = slow_weight(bath.omega[i], omega_star, eta);
        const double moved = s * bath.lambda[i];
        out.fast.lambda[i] = bath.lambda[i] - moved;
        out.slow_lambda += moved;
        var += moved * bath.omega[i] * coth(0.5 * beta * bath.omega[i]);
    }
    out.sigma = (mode == SigmaMode::Sqrt) ? std::sqrt(var) : var;
    return out;
}

}  // namespace qdiss
