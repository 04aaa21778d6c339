#include "qdiss/heom.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>

#include "qdiss/errors.hpp"

namespace qdiss {

using cplx = std::complex<double>;

ExpDecomposition drude_matsubara(double lambda, double omega_c, double beta,
                                 std::size_t n_matsu) {
    if (lambda < 0.0 || omega_c <= 0.0 || beta <= 0.0)
        throw ConfigError("bath decomposition requires lambda >= 0, omega_c > 0, beta > 0");
    const double half = 0.5 * beta * omega_c;
    const double s = std::sin(half);
    if (std::abs(s) < 1e-12)
        throw ConfigError("beta * omega_c sits on a pole of cot(beta omega_c / 2)");
    ExpDecomposition d;
    d.nu.push_back(omega_c);
    d.c.push_back(lambda * omega_c * cplx{std::cos(half) / s, -1.0});
    for (std::size_t k = 1; k <= n_matsu; ++k) {
        const double nu = 2.0 * M_PI * static_cast<double>(k) / beta;
        const double den = nu * nu - omega_c * omega_c;
        if (std::abs(den) < 1e-12 * nu * nu)
            throw ConfigError("a Matsubara frequency is degenerate with omega_c");
        d.nu.push_back(nu);
        d.c.push_back(cplx{4.0 * lambda * omega_c / beta * nu / den, 0.0});
    }
    return d;
}

std::size_t boltzmann_levels(double beta, double omega, double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0))
        throw ConfigError("thermal coverage must lie strictly between 0 and 1");
    if (beta <= 0.0 || omega <= 0.0)
        throw ConfigError("boltzmann_levels requires beta > 0 and omega > 0");
    double x = -std::log(1.0 - coverage) / (beta * omega);
    std::size_t n = static_cast<std::size_t>(std::ceil(x - 1e-12));
    if (n < 1) n = 1;
    while (-std::expm1(-beta * omega * static_cast<double>(n)) < coverage) ++n;
    return n;
}

namespace {

constexpr std::uint32_t kInvalid = 0xffffffffu;

struct Term {
    int channel;
    double nu;
    cplx c;
};

// Hierarchy topology. The Drude pole and the first few Matsubara terms span a
// dense multi-index set up to the tier cap; the remaining Matsubara terms
// decay too fast to build up multi-quantum occupation and enter as
// single-quantum rows hanging off the root.
struct Hierarchy {
    std::vector<Term> terms;              // dense terms, F of them
    std::size_t n_dense = 0;
    std::vector<std::uint8_t> occ;        // n_dense * F
    std::vector<double> gamma;            // n_dense
    std::vector<std::uint32_t> up, down;  // n_dense * F
    std::vector<Term> singles;            // far Matsubara rows (gamma = nu)
};

Hierarchy build_hierarchy(const HeomModel& m, const HeomParams& p) {
    const ExpDecomposition dec = drude_matsubara(m.lambda, m.omega_c, p.beta, p.n_matsu);
    Hierarchy h;
    const std::size_t nf = std::min(p.n_full_matsu, p.n_matsu);
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k <= nf; ++k)
            h.terms.push_back({a, dec.nu[k], dec.c[k]});
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = nf + 1; k <= p.n_matsu; ++k)
            h.singles.push_back({a, dec.nu[k], dec.c[k]});

    const std::size_t f = h.terms.size();
    std::map<std::vector<std::uint8_t>, std::uint32_t> ids;
    std::vector<std::uint8_t> cur(f, 0);
    // Depth-first enumeration in lexicographic order; the all-zero root comes
    // out first.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                            std::size_t used) {
        if (pos == f) {
            ids.emplace(cur, static_cast<std::uint32_t>(h.n_dense++));
            h.occ.insert(h.occ.end(), cur.begin(), cur.end());
            return;
        }
        for (std::size_t o = 0; o + used <= p.n_hier; ++o) {
            cur[pos] = static_cast<std::uint8_t>(o);
            rec(pos + 1, used + o);
        }
        cur[pos] = 0;
    };
    rec(0, 0);

    h.gamma.resize(h.n_dense);
    h.up.assign(h.n_dense * f, kInvalid);
    h.down.assign(h.n_dense * f, kInvalid);
    std::vector<std::uint8_t> key(f);
    for (std::size_t i = 0; i < h.n_dense; ++i) {
        const std::uint8_t* occ = &h.occ[i * f];
        double g = 0.0;
        for (std::size_t j = 0; j < f; ++j) g += static_cast<double>(occ[j]) * h.terms[j].nu;
        h.gamma[i] = g;
        for (std::size_t j = 0; j < f; ++j) {
            std::copy(occ, occ + f, key.begin());
            key[j] = static_cast<std::uint8_t>(occ[j] + 1);
            if (auto it = ids.find(key); it != ids.end()) h.up[i * f + j] = it->second;
            if (occ[j] > 0) {
                key[j] = static_cast<std::uint8_t>(occ[j] - 1);
                h.down[i * f + j] = ids.at(key);
            }
        }
    }
    return h;
}

// Sparse Hamiltonian triplets (real symmetric) and the channel block layout.
struct SystemOps {
    std::size_t levels = 1;  // probe ladder size
    std::size_t d = 2;       // 2 * levels
    struct Trip {
        std::uint32_t r, c;
        double v;
    };
    std::vector<Trip> h;        // subsystem + probe Hamiltonian
    std::vector<Trip> h_probe;  // probe part alone, for the energy readout
    std::vector<cplx> rho0;     // initial density matrix, d x d row major
};

SystemOps build_system(const HeomModel& m, const HeomParams& par, std::size_t levels) {
    SystemOps so;
    so.levels = levels;
    so.d = 2 * levels;
    const std::size_t l = levels;
    auto idx = [l](int site, std::size_t lev) {
        return static_cast<std::uint32_t>(site * l + lev);
    };

    const double site_e[2] = {m.e1 + m.lambda, m.e2 + m.lambda};
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k < l; ++k)
            so.h.push_back({idx(a, k), idx(a, k), site_e[a]});
    for (std::size_t k = 0; k < l; ++k) {
        so.h.push_back({idx(0, k), idx(1, k), m.v});
        so.h.push_back({idx(1, k), idx(0, k), m.v});
    }

    if (m.probe) {
        const ProbeSpec& pr = *m.probe;
        const double w = pr.omega;
        const double d_bp = std::sqrt(2.0 * pr.s_bp / w);
        const int ch = pr.channel;
        if (ch != 0 && ch != 1) throw ConfigError("probe channel must be 0 or 1");
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < l; ++k) {
                const double e = w * (static_cast<double>(k) + 0.5);
                so.h.push_back({idx(a, k), idx(a, k), e});
                so.h_probe.push_back({idx(a, k), idx(a, k), e});
            }
        // Displaced-well coupling on the probed site:
        //   w^2 (x - d s)^2 / 2 - w^2 x^2 / 2 = -w^2 d x s + w^2 d^2 s / 2,
        // with s the population projector of that site.
        for (std::size_t k = 0; k < l; ++k) {
            so.h.push_back({idx(ch, k), idx(ch, k), pr.s_bp * w});
            so.h_probe.push_back({idx(ch, k), idx(ch, k), pr.s_bp * w});
        }
        for (std::size_t k = 0; k + 1 < l; ++k) {
            const double x = std::sqrt(static_cast<double>(k + 1) / (2.0 * w));
            const double v = -w * w * d_bp * x;
            so.h.push_back({idx(ch, k), idx(ch, k + 1), v});
            so.h.push_back({idx(ch, k + 1), idx(ch, k), v});
            so.h_probe.push_back({idx(ch, k), idx(ch, k + 1), v});
            so.h_probe.push_back({idx(ch, k + 1), idx(ch, k), v});
        }
    }

    // Initial state: site 1 populated, probe thermalized in the bare well.
    so.rho0.assign(so.d * so.d, cplx{0.0, 0.0});
    if (m.probe) {
        const double bw = par.beta * m.probe->omega;
        double norm = 0.0;
        for (std::size_t k = 0; k < l; ++k) norm += std::exp(-bw * static_cast<double>(k));
        for (std::size_t k = 0; k < l; ++k)
            so.rho0[idx(0, k) * so.d + idx(0, k)] = std::exp(-bw * static_cast<double>(k)) / norm;
    } else {
        so.rho0[0] = 1.0;
    }
    return so;
}

// One hierarchy row's location after the stiff split.
enum class Loc : std::uint8_t { Rk, Comp };
struct Slot {
    Loc loc;
    std::uint32_t i;
};

// Link operators applied during right-hand-side evaluation.
//   kind 0: dst += -i s [V_a, src]
//   kind 1: dst += -i s (c V_a src - conj(c) src V_a)
struct LinkOp {
    std::uint32_t dst;  // receiving row slot
    std::uint32_t src;  // source row slot
    std::uint8_t src_comp;
    std::uint8_t kind;
    std::uint8_t channel;
    double s;
    cplx c;
};

class Propagator {
public:
    Propagator(const HeomModel& m, const HeomParams& p, std::size_t levels)
        : par_(p), sys_(build_system(m, p, levels)), hier_(build_hierarchy(m, p)) {
        plan();
        allocate();
    }

    HeomResult run();

private:
    const HeomParams par_;
    SystemOps sys_;
    Hierarchy hier_;

    std::size_t dd_ = 0;      // matrix entries per row
    std::size_t n_rk_ = 0;    // rows integrated by the embedded scheme
    std::size_t n_comp_ = 0;  // fast rows handled in closed form

    std::vector<Slot> slot_;          // global row -> slot
    std::vector<double> rk_gamma_;    // per rk row
    std::vector<double> comp_gamma_;  // per companion row
    std::vector<LinkOp> rk_ops_;      // contributions into rk rows
    std::vector<LinkOp> comp_ops_;    // contributions into companion forcings

    std::vector<cplx> y_, ytmp_, k_[6];
    std::vector<cplx> cy_, cf0_, cf1_, cstage_;

    void plan();
    void allocate();
    void rhs(const std::vector<cplx>& y, double tau, std::vector<cplx>& out);
    void materialize_companions(double tau);
    void companion_forcing(const std::vector<cplx>& y_rk, const std::vector<cplx>& y_comp,
                           std::vector<cplx>& f);
    void apply_link(const LinkOp& op, const cplx* src, cplx* dst) const;
    void apply_hcomm(const cplx* src, cplx* dst) const;

    double root_error(double dt) const;
};

void Propagator::plan() {
    const std::size_t f = hier_.terms.size();
    const std::size_t n_rows = hier_.n_dense + hier_.singles.size();
    slot_.resize(n_rows);

    auto gamma_of = [&](std::size_t row) {
        return row < hier_.n_dense ? hier_.gamma[row]
                                   : hier_.singles[row - hier_.n_dense].nu;
    };
    auto is_stiff = [&](std::size_t row) {
        return par_.stiff_exponential && gamma_of(row) * par_.dt_max > par_.stiff_threshold;
    };

    for (std::size_t r = 0; r < n_rows; ++r) {
        if (is_stiff(r))
            slot_[r] = {Loc::Comp, static_cast<std::uint32_t>(n_comp_++)};
        else
            slot_[r] = {Loc::Rk, static_cast<std::uint32_t>(n_rk_++)};
    }
    rk_gamma_.resize(n_rk_);
    comp_gamma_.resize(n_comp_);
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (slot_[r].loc == Loc::Rk)
            rk_gamma_[slot_[r].i] = gamma_of(r);
        else
            comp_gamma_[slot_[r].i] = gamma_of(r);
    }

    auto push = [&](std::size_t dst_row, std::size_t src_row, std::uint8_t kind,
                    std::uint8_t channel, double s, cplx c) {
        LinkOp op;
        op.src = slot_[src_row].i;
        op.src_comp = slot_[src_row].loc == Loc::Comp ? 1 : 0;
        op.kind = kind;
        op.channel = channel;
        op.s = s;
        op.c = c;
        if (slot_[dst_row].loc == Loc::Rk) {
            op.dst = slot_[dst_row].i;
            rk_ops_.push_back(op);
        } else {
            op.dst = slot_[dst_row].i;
            comp_ops_.push_back(op);
        }
    };

    for (std::size_t i = 0; i < hier_.n_dense; ++i) {
        const std::uint8_t* occ = &hier_.occ[i * f];
        for (std::size_t j = 0; j < f; ++j) {
            const Term& t = hier_.terms[j];
            const double ca = std::abs(t.c);
            if (const std::uint32_t u = hier_.up[i * f + j]; u != kInvalid) {
                const double s = std::sqrt((static_cast<double>(occ[j]) + 1.0) * ca);
                push(i, u, 0, static_cast<std::uint8_t>(t.channel), s, t.c);
            }
            if (const std::uint32_t dn = hier_.down[i * f + j]; dn != kInvalid) {
                const double s = std::sqrt(static_cast<double>(occ[j]) / ca);
                push(i, dn, 1, static_cast<std::uint8_t>(t.channel), s, t.c);
            }
        }
    }
    for (std::size_t q = 0; q < hier_.singles.size(); ++q) {
        const Term& t = hier_.singles[q];
        const double ca = std::abs(t.c);
        const std::size_t row = hier_.n_dense + q;
        // root <-> single-quantum row couplings
        push(0, row, 0, static_cast<std::uint8_t>(t.channel), std::sqrt(ca), t.c);
        push(row, 0, 1, static_cast<std::uint8_t>(t.channel), std::sqrt(1.0 / ca), t.c);
    }
}

void Propagator::allocate() {
    dd_ = sys_.d * sys_.d;
    const double bytes =
        16.0 * (static_cast<double>(dd_) * (9.0 * static_cast<double>(n_rk_)
                                            + 4.0 * static_cast<double>(n_comp_)));
    const double cap = par_.memory_cap_gb * 1024.0 * 1024.0 * 1024.0;
    if (bytes > cap) {
        std::ostringstream msg;
        msg << "hierarchy state would need " << bytes / (1024.0 * 1024.0 * 1024.0)
            << " GiB (" << (n_rk_ + n_comp_) << " rows of dimension " << sys_.d
            << "), above the configured cap of " << par_.memory_cap_gb << " GiB";
        throw ConfigError(msg.str());
    }
    y_.assign(n_rk_ * dd_, cplx{0.0, 0.0});
    ytmp_.assign(n_rk_ * dd_, cplx{0.0, 0.0});
    for (auto& k : k_) k.assign(n_rk_ * dd_, cplx{0.0, 0.0});
    cy_.assign(n_comp_ * dd_, cplx{0.0, 0.0});
    cf0_.assign(n_comp_ * dd_, cplx{0.0, 0.0});
    cf1_.assign(n_comp_ * dd_, cplx{0.0, 0.0});
    cstage_.assign(n_comp_ * dd_, cplx{0.0, 0.0});
    // root starts at rho0, everything else at zero
    std::copy(sys_.rho0.begin(), sys_.rho0.end(), y_.begin());
}

// dst += -i s [V_a, src] restricted to the channel block structure: V_a is
// the projector on site a, so the commutator scales the off-diagonal blocks
// by +-1 and kills the diagonal blocks.
void Propagator::apply_link(const LinkOp& op, const cplx* src, cplx* dst) const {
    const std::size_t l = sys_.levels;
    const std::size_t d = sys_.d;
    const std::size_t a0 = op.channel * l;  // probed block row range [a0, a0+l)
    if (op.kind == 0) {
        const cplx pm{0.0, -op.s};  // -i s
        // rows in block, cols out of block: + ; rows out, cols in: -
        for (std::size_t r = a0; r < a0 + l; ++r) {
            const std::size_t off = r * d;
            for (std::size_t c = 0; c < d; ++c) {
                if (c >= a0 && c < a0 + l) continue;
                dst[off + c] += pm * src[off + c];
            }
        }
        for (std::size_t r = 0; r < d; ++r) {
            if (r >= a0 && r < a0 + l) continue;
            const std::size_t off = r * d;
            for (std::size_t c = a0; c < a0 + l; ++c) dst[off + c] -= pm * src[off + c];
        }
        return;
    }
    // kind 1: dst += -i s (c V src - conj(c) src V)
    const cplx in_in = cplx{0.0, -op.s} * (op.c - std::conj(op.c));
    const cplx in_out = cplx{0.0, -op.s} * op.c;
    const cplx out_in = cplx{0.0, op.s} * std::conj(op.c);
    for (std::size_t r = a0; r < a0 + l; ++r) {
        const std::size_t off = r * d;
        for (std::size_t c = 0; c < d; ++c) {
            if (c >= a0 && c < a0 + l)
                dst[off + c] += in_in * src[off + c];
            else
                dst[off + c] += in_out * src[off + c];
        }
    }
    for (std::size_t r = 0; r < d; ++r) {
        if (r >= a0 && r < a0 + l) continue;
        const std::size_t off = r * d;
        for (std::size_t c = a0; c < a0 + l; ++c) dst[off + c] += out_in * src[off + c];
    }
}

void Propagator::apply_hcomm(const cplx* src, cplx* dst) const {
    const std::size_t d = sys_.d;
    const cplx mi{0.0, -1.0};
    for (const auto& t : sys_.h) {
        const cplx w = mi * t.v;
        // -i (H src): row t.r accumulates src row t.c
        const cplx* sr = src + static_cast<std::size_t>(t.c) * d;
        cplx* dr = dst + static_cast<std::size_t>(t.r) * d;
        for (std::size_t c = 0; c < d; ++c) dr[c] += w * sr[c];
        // +i (src H): column t.c accumulates src column t.r
        const cplx* sc = src + t.r;
        cplx* dc = dst + t.c;
        for (std::size_t r = 0; r < d; ++r) dc[r * d] -= w * sc[r * d];
    }
}

void Propagator::materialize_companions(double tau) {
    for (std::size_t i = 0; i < n_comp_; ++i) {
        const double g = comp_gamma_[i];
        const double e = std::exp(-g * tau);
        const double q = -std::expm1(-g * tau) / g;  // (1 - e^{-g tau}) / g
        const cplx* y0 = cy_.data() + i * dd_;
        const cplx* f0 = cf0_.data() + i * dd_;
        cplx* out = cstage_.data() + i * dd_;
        for (std::size_t n = 0; n < dd_; ++n) out[n] = e * y0[n] + q * f0[n];
    }
}

void Propagator::companion_forcing(const std::vector<cplx>& y_rk,
                                   const std::vector<cplx>& y_comp, std::vector<cplx>& f) {
    std::fill(f.begin(), f.end(), cplx{0.0, 0.0});
    for (const auto& op : comp_ops_) {
        const cplx* src = (op.src_comp ? y_comp.data() : y_rk.data()) + op.src * dd_;
        apply_link(op, src, f.data() + op.dst * dd_);
    }
}

void Propagator::rhs(const std::vector<cplx>& y, double tau, std::vector<cplx>& out) {
    materialize_companions(tau);
    std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_rk_; ++i) {
        const cplx* src = y.data() + i * dd_;
        cplx* dst = out.data() + i * dd_;
        apply_hcomm(src, dst);
        const double g = rk_gamma_[i];
        if (g != 0.0)
            for (std::size_t n = 0; n < dd_; ++n) dst[n] -= g * src[n];
    }
    for (const auto& op : rk_ops_) {
        const cplx* src = (op.src_comp ? cstage_.data() : y.data()) + op.src * dd_;
        apply_link(op, src, out.data() + op.dst * dd_);
    }
}

namespace rkf {
// Fehlberg coefficients.
constexpr double c[6] = {0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5};
constexpr double a2[] = {0.25};
constexpr double a3[] = {3.0 / 32.0, 9.0 / 32.0};
constexpr double a4[] = {1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0};
constexpr double a5[] = {439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0};
constexpr double a6[] = {-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0};
constexpr double b5[6] = {16.0 / 135.0, 0.0,       6656.0 / 12825.0,
                          28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0};
constexpr double b4[6] = {25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0};
}  // namespace rkf

double Propagator::root_error(double dt) const {
    // Embedded error of the physical populations: the difference of the 4th
    // and 5th order candidates restricted to the root diagonal. The trace of
    // the root is conserved identically by the coupling structure, so a pure
    // trace functional would be blind; the populations see both the trace
    // direction and the onset of any instability fed back from deep rows.
    const std::size_t d = sys_.d;
    double err = 0.0;
    for (std::size_t m = 0; m < d; ++m) {
        cplx acc{0.0, 0.0};
        for (int s = 0; s < 6; ++s)
            acc += (rkf::b5[s] - rkf::b4[s]) * k_[s][m * d + m];
        err += std::abs(acc);
    }
    return dt * err;
}

HeomResult Propagator::run() {
    HeomResult res;
    res.out_step = par_.out_step;
    res.n_adm = n_rk_ + n_comp_;
    res.dim = sys_.d;
    res.n_levels = sys_.levels;
    res.min_dt = par_.dt_max;

    const std::size_t d = sys_.d;
    const std::size_t n_out =
        static_cast<std::size_t>(std::llround(par_.t_sim / par_.out_step)) + 1;

    const bool probed = !sys_.h_probe.empty();
    double probe_e0 = 0.0;

    auto record = [&](std::size_t) {
        double p1 = 0.0, p2 = 0.0;
        double ti = 0.0;
        for (std::size_t m = 0; m < d; ++m) {
            const cplx v = y_[m * d + m];
            if (m < sys_.levels)
                p1 += v.real();
            else
                p2 += v.real();
            ti += v.imag();
        }
        res.p1.push_back(p1);
        res.p2.push_back(p2);
        res.trace_err.push_back(std::hypot(p1 + p2 - 1.0, ti));
        if (probed) {
            double e = 0.0;
            for (const auto& t : sys_.h_probe)
                e += t.v * y_[static_cast<std::size_t>(t.c) * d + t.r].real();
            if (res.probe_energy.empty()) probe_e0 = e;
            res.probe_energy.push_back(e - probe_e0);
        }
    };

    // Initial companion forcing from the initial state.
    companion_forcing(y_, cy_, cf0_);

    double t = 0.0;
    double dt = par_.dt_max;
    const double dt_min = std::max(1e-12, par_.dt_max * 1e-7);

    res.t.push_back(0.0);
    record(0);

    for (std::size_t sample = 1; sample < n_out; ++sample) {
        const double t_target = static_cast<double>(sample) * par_.out_step;
        while (t < t_target - 1e-12 * par_.out_step) {
            dt = std::min(dt, t_target - t);

            // Stage evaluations.
            rhs(y_, 0.0, k_[0]);
            auto stage = [&](int s, const double* a, int na) {
                for (std::size_t n = 0; n < y_.size(); ++n) {
                    cplx acc{0.0, 0.0};
                    for (int q = 0; q < na; ++q) acc += a[q] * k_[q][n];
                    ytmp_[n] = y_[n] + dt * acc;
                }
                rhs(ytmp_, rkf::c[s] * dt, k_[s]);
            };
            stage(1, rkf::a2, 1);
            stage(2, rkf::a3, 2);
            stage(3, rkf::a4, 3);
            stage(4, rkf::a5, 4);
            stage(5, rkf::a6, 5);

            const double err = root_error(dt);
            if (!std::isfinite(err) || err > par_.rel_tol) {
                ++res.steps_rejected;
                const double shrink =
                    std::isfinite(err)
                        ? std::max(0.1, 0.9 * std::pow(par_.rel_tol / err, 0.25))
                        : 0.1;
                dt *= shrink;
                if (dt < dt_min)
                    throw PhysicsError(
                        "hierarchy propagation diverged: the step controller drove the "
                        "time step below " + std::to_string(dt_min));
                continue;
            }

            // Accept: fifth order advance.
            for (std::size_t n = 0; n < y_.size(); ++n) {
                cplx acc{0.0, 0.0};
                for (int s = 0; s < 6; ++s) acc += rkf::b5[s] * k_[s][n];
                y_[n] += dt * acc;
            }

            if (n_comp_ > 0) {
                // Closed-form update of the fast rows over [t, t + dt]:
                //   y' = -g y + f(t),  f interpolated linearly between its
                // endpoint evaluations. The dropped subsystem commutator
                // rotates at frequencies far below g for every row classified
                // as fast; the induced relative error is of order |H| / g on
                // amplitudes already suppressed by 1/g.
                companion_forcing(y_, cy_, cf1_);
                for (std::size_t i = 0; i < n_comp_; ++i) {
                    const double g = comp_gamma_[i];
                    const double eg = std::exp(-g * dt);
                    const double g1 = -std::expm1(-g * dt) / g;
                    const double g2 = (dt - g1) / g;
                    cplx* yc = cy_.data() + i * dd_;
                    const cplx* f0 = cf0_.data() + i * dd_;
                    const cplx* f1 = cf1_.data() + i * dd_;
                    for (std::size_t n = 0; n < dd_; ++n) {
                        const cplx df = (f1[n] - f0[n]) / dt;
                        yc[n] = eg * yc[n] + g1 * f1[n] - g2 * df;
                    }
                }
                // Next step's start forcing sees the updated fast rows.
                companion_forcing(y_, cy_, cf0_);
            }

            t += dt;
            ++res.steps_accepted;
            res.min_dt = std::min(res.min_dt, dt);
            const double grow =
                std::min(4.0, std::max(0.2, 0.9 * std::pow(par_.rel_tol /
                                                            std::max(err, 1e-300),
                                                        0.2)));
            dt = std::min(par_.dt_max, dt * grow);
        }
        t = t_target;
        res.t.push_back(t);
        record(sample);
    }
    return res;
}

}  // namespace

HeomResult propagate_heom(const HeomModel& model, const HeomParams& par) {
    if (par.t_sim <= 0.0 || par.out_step <= 0.0 || par.dt_max <= 0.0)
        throw ConfigError("hierarchy propagation needs positive t_sim, out_step, dt_max");
    if (par.rel_tol <= 0.0) throw ConfigError("step controller tolerance must be positive");
    std::size_t levels = 1;
    if (model.probe) {
        const ProbeSpec& pr = *model.probe;
        if (pr.omega <= 0.0 || pr.s_bp <= 0.0)
            throw ConfigError("probe requires omega > 0 and s_bp > 0");
        levels = pr.n_levels > 0 ? pr.n_levels
                                 : boltzmann_levels(par.beta, pr.omega, pr.coverage);
    }
    Propagator prop(model, par, levels);
    return prop.run();
}

DriftCorrected drift_correct(const std::vector<double>& e, const std::vector<double>& p1,
                             double dt, double stationarity_tol) {
    if (e.size() < 10 || p1.size() != e.size())
        throw ConfigError("drift correction needs matching series of at least 10 samples");
    const std::size_t n = e.size();
    const std::size_t lo = n - n / 5;  // final fifth

    // The correction is only meaningful once the populations have settled;
    // otherwise the signal still carries real transfer dynamics.
    double dp_max = 0.0;
    for (std::size_t i = lo; i + 1 < n; ++i)
        dp_max = std::max(dp_max, std::abs(p1[i + 1] - p1[i]) / dt);
    if (dp_max > stationarity_tol) {
        std::ostringstream msg;
        msg << "steady-state window is not stationary: max |dp/dt| = " << dp_max
            << " exceeds " << stationarity_tol
            << "; extend t_sim before reading the dissipation value";
        throw PhysicsError(msg.str());
    }

    // Least squares slope over the window.
    double st = 0.0, se = 0.0, stt = 0.0, ste = 0.0;
    const double m = static_cast<double>(n - lo);
    for (std::size_t i = lo; i < n; ++i) {
        const double ti = static_cast<double>(i) * dt;
        st += ti;
        se += e[i];
        stt += ti * ti;
        ste += ti * e[i];
    }
    const double denom = m * stt - st * st;
    const double slope = denom != 0.0 ? (m * ste - st * se) / denom : 0.0;

    DriftCorrected out;
    out.slope = slope;
    out.e.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.e[i] = e[i] - slope * (static_cast<double>(i) * dt);
    out.e_steady = out.e.back();
    return out;
}

ProbeScanResult probe_scan(const HeomModel& base, const HeomParams& par,
                           const SpectralDensity& j, const std::vector<double>& omegas,
                           double stationarity_tol) {
    if (!base.probe) throw ConfigError("probe scan needs a probe specification");
    ProbeScanResult out;
    out.out_step = par.out_step;
    for (double w : omegas) {
        ProbeScanRow row;
        row.omega = w;
        try {
            HeomModel m = base;
            ProbeSpec pr = *base.probe;
            pr.omega = w;
            if (pr.n_levels == 0 && w < 0.2)
                pr.coverage = std::min(pr.coverage, 0.99);  // keep low-frequency ladders finite
            m.probe = pr;
            HeomResult r = propagate_heom(m, par);
            if (out.t.empty()) out.t = r.t;
            row.n_levels = r.n_levels;
            // Probe energy -> dissipation spectrum at this frequency.
            const double conv = j(w) / (w * w * pr.s_bp);
            std::vector<double> e(r.probe_energy.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = conv * r.probe_energy[i];
            DriftCorrected c = drift_correct(e, r.p1, par.out_step, stationarity_tol);
            row.e_t = std::move(c.e);
            row.slope = c.slope;
            row.e_steady = c.e_steady;
            row.d_t.assign(row.e_t.size(), 0.0);
            for (std::size_t i = 0; i < row.e_t.size(); ++i) {
                if (i == 0)
                    row.d_t[i] = (row.e_t[1] - row.e_t[0]) / par.out_step;
                else if (i + 1 == row.e_t.size())
                    row.d_t[i] = (row.e_t[i] - row.e_t[i - 1]) / par.out_step;
                else
                    row.d_t[i] = (row.e_t[i + 1] - row.e_t[i - 1]) / (2.0 * par.out_step);
            }
            row.ok = true;
        } catch (const std::exception& ex) {
            row.ok = false;
            row.error = ex.what();
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace qdiss
