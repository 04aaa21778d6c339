#include "qdiss/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "qdiss/errors.hpp"

namespace qdiss {

DecayProfile build_decay_profile(const std::vector<ProfileTerm>& terms, double t_span,
                                 double support_cutoff) {
    if (terms.empty()) throw ConfigError("decay profile needs at least one broadening term");
    const double dt = terms.front().g->dt();
    for (const auto& t : terms)
        if (t.g->dt() != dt)
            throw ConfigError("decay profile terms must share one time step");
    if (t_span <= 0.0) throw ConfigError("decay profile requires a positive horizon");

    DecayProfile p;
    p.dt = dt;
    p.t_span = t_span;
    const std::size_t n_total = static_cast<std::size_t>(std::llround(t_span / dt)) + 1;

    // Grow in geometric segments and stop once the profile magnitude falls
    // below the support cutoff; most profiles die well before the horizon.
    std::size_t have = 0;
    std::size_t want = std::min<std::size_t>(n_total, 8192);
    p.phi.reserve(want);
    while (have < n_total) {
        for (const auto& t : terms) t.g->ensure(want);
        for (std::size_t k = have; k < want; ++k) {
            std::complex<double> gsum{0.0, 0.0};
            for (const auto& t : terms) gsum += t.weight * t.g->table()[k];
            p.phi.push_back(std::exp(-gsum));
        }
        have = want;
        if (std::abs(p.phi.back()) < support_cutoff) {
            p.truncated = true;
            p.tail_ratio = 0.0;
            return p;
        }
        want = std::min(n_total, want * 4);
    }
    double peak = 0.0;
    for (const auto& v : p.phi) peak = std::max(peak, std::abs(v));
    p.tail_ratio = (peak > 0.0) ? std::abs(p.phi.back()) / peak : 0.0;
    return p;
}

std::complex<double> half_fourier(const DecayProfile& p, double nu) {
    const std::size_t n = p.phi.size();
    if (n < 2) throw ConfigError("decay profile too short to integrate");
    const double dt = p.dt;
    const std::complex<double> rot = std::polar(1.0, -nu * dt);
    std::complex<double> z{1.0, 0.0};
    std::complex<double> acc = 0.5 * p.phi[0];
    for (std::size_t k = 1; k < n; ++k) {
        if ((k & 4095u) == 0u) z = std::polar(1.0, -nu * (static_cast<double>(k) * dt));
        else z *= rot;
        // Final trapezoid half weight only matters when the profile is still
        // alive at the horizon.
        const double w = (!p.truncated && k + 1 == n) ? 0.5 : 1.0;
        acc += w * p.phi[k] * z;
    }
    return acc * dt;
}

namespace {

std::mutex g_fftw_mutex;  // FFTW planning is not thread safe

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

SpectrumTable::SpectrumTable(const DecayProfile& p, double nu_min, double nu_max) {
    if (nu_max <= nu_min) throw ConfigError("spectrum table window is empty");
    const std::size_t n = p.phi.size();
    const double dt = p.dt;

    // Transform length: at least 32 bins across the sharpest spectral feature
    // (width ~ 2 pi / live span) keeps the cubic interpolation error below
    // 1e-5 relative; padding beyond 2^24 would cost more memory than the
    // accuracy is worth.
    const std::size_t len =
        std::min<std::size_t>(std::size_t{1} << 24,
                              std::max<std::size_t>(std::size_t{1} << 20, next_pow2(32 * n)));
    const double dnu = 2.0 * M_PI / (static_cast<double>(len) * dt);

    // Window indices with a two-bin margin on either side.
    const long m_lo = static_cast<long>(std::floor(nu_min / dnu)) - 2;
    const long m_hi = static_cast<long>(std::ceil(nu_max / dnu)) + 2;
    const long half = static_cast<long>(len) / 2;
    if (m_lo < -half || m_hi >= half)
        throw ConfigError("spectrum table window exceeds the resolvable band");

    nu0_ = static_cast<double>(m_lo) * dnu;
    dnu_ = dnu;
    const std::size_t n_win = static_cast<std::size_t>(m_hi - m_lo) + 1;
    val_.resize(n_win);
    der_.resize(n_win);

    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_complex* buf_in = fftw_alloc_complex(len);
    fftw_complex* buf_out = fftw_alloc_complex(len);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(len), buf_in, buf_out,
                                      FFTW_FORWARD, FFTW_ESTIMATE);

    const bool endpoint = !p.truncated;
    const double t_end = static_cast<double>(n - 1) * dt;
    const std::complex<double> phi_end = p.phi.back();

    auto bin_to_index = [&](long m) -> std::size_t {
        return static_cast<std::size_t>(m >= 0 ? m : m + static_cast<long>(len));
    };

    // Pass 1: phi itself -> A(nu) up to trapezoid endpoint corrections.
    for (std::size_t k = 0; k < len; ++k) {
        const std::complex<double> v = (k < n) ? p.phi[k] : std::complex<double>{0.0, 0.0};
        buf_in[k][0] = v.real();
        buf_in[k][1] = v.imag();
    }
    fftw_execute(plan);
    for (std::size_t i = 0; i < n_win; ++i) {
        const long m = m_lo + static_cast<long>(i);
        const std::size_t mi = bin_to_index(m);
        std::complex<double> x{buf_out[mi][0], buf_out[mi][1]};
        x -= 0.5 * p.phi[0];
        if (endpoint) {
            const double nu = static_cast<double>(m) * dnu;
            x -= 0.5 * phi_end * std::polar(1.0, -nu * t_end);
        }
        val_[i] = x * dt;
    }

    // Pass 2: t * phi -> dA/dnu = -i int t phi e^{-i nu t} dt.
    for (std::size_t k = 0; k < len; ++k) {
        if (k < n) {
            const std::complex<double> v = p.phi[k] * (static_cast<double>(k) * dt);
            buf_in[k][0] = v.real();
            buf_in[k][1] = v.imag();
        } else {
            buf_in[k][0] = 0.0;
            buf_in[k][1] = 0.0;
        }
    }
    fftw_execute(plan);
    const std::complex<double> mini{0.0, -1.0};
    for (std::size_t i = 0; i < n_win; ++i) {
        const long m = m_lo + static_cast<long>(i);
        const std::size_t mi = bin_to_index(m);
        std::complex<double> x{buf_out[mi][0], buf_out[mi][1]};
        if (endpoint) {
            const double nu = static_cast<double>(m) * dnu;
            x -= 0.5 * (t_end * phi_end) * std::polar(1.0, -nu * t_end);
        }
        der_[i] = mini * x * dt;
    }

    fftw_destroy_plan(plan);
    fftw_free(buf_in);
    fftw_free(buf_out);
}

std::complex<double> SpectrumTable::operator()(double nu) const {
    const double x = (nu - nu0_) / dnu_;
    if (x < 0.0 || x > static_cast<double>(val_.size() - 1))
        throw std::out_of_range("spectrum table evaluated outside its window");
    std::size_t i = static_cast<std::size_t>(x);
    if (i >= val_.size() - 1) i = val_.size() - 2;
    const double u = x - static_cast<double>(i);
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * val_[i] + (h10 * dnu_) * der_[i] + h01 * val_[i + 1] + (h11 * dnu_) * der_[i + 1];
}

}  // namespace qdiss
