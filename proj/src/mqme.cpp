#include "qdiss/mqme.hpp"

#include <cmath>
#include <sstream>

#include "qdiss/errors.hpp"

namespace qdiss {

RateResult rate_from_profile(const DecayProfile& p, double v, double b, double tail_tol) {
    RateResult r;
    const double re = half_fourier(p, b).real();
    r.k = 2.0 * v * v * re;
    r.tail_ratio = p.tail_ratio;
    r.tail_warning = p.tail_ratio > tail_tol;
    if (r.k < 0.0) {
        // The spectral weight behind a rate is non-negative up to truncation
        // ripple; anything beyond ripple scale means the quadrature is broken.
        if (r.k < -1e-10) {
            std::ostringstream msg;
            msg << "rate constant came out negative (" << r.k
                << "); the half-line quadrature is not converged";
            throw PhysicsError(msg.str());
        }
        r.k = 0.0;
    }
    return r;
}

Eigen::MatrixXd RateMatrix::generator() const {
    const auto n = k.rows();
    Eigen::MatrixXd g = k;
    for (Eigen::Index a = 0; a < n; ++a) {
        g(a, a) = 0.0;
        double out = 0.0;
        for (Eigen::Index b = 0; b < n; ++b)
            if (b != a) out += k(b, a);
        g(a, a) = -out;
    }
    return g;
}

std::vector<double> steady_state(const RateMatrix& rates) {
    const Eigen::MatrixXd g = rates.generator();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
    lu.setThreshold(1e-12);
    const Eigen::MatrixXd kernel = lu.kernel();
    if (kernel.cols() != 1)
        throw PhysicsError("rate network has a degenerate stationary space (dimension "
                           + std::to_string(kernel.cols()) + "); it is not connected");
    Eigen::VectorXd v = kernel.col(0);
    const double total = v.sum();
    if (total == 0.0) throw PhysicsError("stationary state has zero total weight");
    v /= total;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < -1e-10)
            throw PhysicsError("stationary state has a negative population");
        if (v(i) < 0.0) v(i) = 0.0;
    }
    v /= v.sum();
    return {v.data(), v.data() + v.size()};
}

PopulationTrajectory propagate_populations(const RateMatrix& rates,
                                           const std::vector<double>& p0, double dt,
                                           double t_sim, std::size_t stride) {
    const std::size_t n = rates.size();
    if (p0.size() != n) throw ConfigError("initial populations do not match the state count");
    if (dt <= 0.0 || t_sim < 0.0 || stride == 0)
        throw ConfigError("propagation needs dt > 0, t_sim >= 0 and a positive stride");

    std::size_t n_steps = static_cast<std::size_t>(std::ceil(t_sim / dt - 1e-9));
    n_steps = ((n_steps + stride - 1) / stride) * stride;
    const std::size_t n_samples = n_steps / stride + 1;

    const Eigen::MatrixXd g = rates.generator();
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(p0.data(), n);

    PopulationTrajectory out;
    out.dt = dt * static_cast<double>(stride);
    out.p.assign(n, std::vector<double>(n_samples, 0.0));

    auto record = [&](std::size_t sample) {
        double sum = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double v = p(s);
            if (v < -1e-8)
                throw PhysicsError("population went negative during propagation");
            out.p[s][sample] = v;
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-8)
            throw PhysicsError("population sum drifted from one during propagation");
    };

    record(0);
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        k1.noalias() = g * p;
        tmp = p + (0.5 * dt) * k1;
        k2.noalias() = g * tmp;
        tmp = p + (0.5 * dt) * k2;
        k3.noalias() = g * tmp;
        tmp = p + dt * k3;
        k4.noalias() = g * tmp;
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (step % stride == 0) record(step / stride);
    }
    return out;
}

std::vector<double> PopulationTrajectory::sigma_z() const {
    if (p.size() != 2) throw ConfigError("sigma_z is defined for two state systems only");
    std::vector<double> out(n_samples());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[0][i] - p[1][i];
    return out;
}

std::vector<double> analytic_two_level_p1(double k12, double k21, double p1_0, double dt,
                                          std::size_t n_samples) {
    const double kappa = k12 + k21;
    std::vector<double> out(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = dt * static_cast<double>(i);
        if (kappa == 0.0) {
            out[i] = p1_0;
        } else {
            const double pinf = k12 / kappa;
            out[i] = pinf + (p1_0 - pinf) * std::exp(-kappa * t);
        }
    }
    return out;
}

}  // namespace qdiss
