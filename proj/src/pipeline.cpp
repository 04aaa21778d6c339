#include "qdiss/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "qdiss/errors.hpp"
#include "qdiss/output.hpp"
#include "qdiss/parallel.hpp"
#include "qdiss/tss.hpp"
#include "qdiss/version.hpp"

namespace qdiss {

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

// Shared per-run state for the trajectory computation. Everything here is
// fixed before the ensemble starts and read-only inside it.
struct TrajectoryEngine {
    bool dimer = true;
    Method method = Method::Density;
    double beta = 1.0, v = 0.0;
    double b21 = 0.0, b12 = 0.0;  // undisordered transfer offsets
    double l_scale = 1.0;         // per-mode coupling weight multiplier

    std::vector<double> wgrid;
    std::vector<double> j_over_w_pref;  // channel prefactor J(w)/w (times 4 for one shared bath)
    const DiscretizedBath* bath = nullptr;
    const DecayProfile* prof = nullptr;
    const SpectrumTable* table = nullptr;  // null: direct quadrature
    std::optional<FrequencyBins> bins;

    double t_sim = 0.0, out_step = 0.0, dt_prop = 0.0;
    std::size_t n_t = 0, stride = 1;

    // payload layout
    std::size_t off_p1 = 0, off_p2 = 0, off_d = 0, off_e = 0, off_einf = 0,
                off_p1inf = 0, size = 0;

    void layout() {
        const std::size_t nw = wgrid.size();
        off_p1 = 0;
        off_p2 = n_t;
        off_d = 2 * n_t;
        off_e = off_d + nw * n_t;
        off_einf = off_e + nw * n_t;
        off_p1inf = off_einf + nw;
        size = off_p1inf + 1;
    }

    double re_a(double nu) const {
        return table ? (*table)(nu).real() : half_fourier(*prof, nu).real();
    }

    double rate_at(double nu) const {
        const double k = 2.0 * v * v * re_a(nu);
        if (k < -1e-10)
            throw PhysicsError("rate constant came out negative; the half-line "
                               "quadrature is not converged");
        return std::max(k, 0.0);
    }

    // Runs one trajectory with the given gap shift (state 2 raised by `shift`
    // relative to state 1) and writes the flat payload.
    void compute(double shift, std::vector<double>& payload) const {
        const double bb21 = b21 + shift;
        const double bb12 = b12 - shift;
        const double kk21 = rate_at(bb21);
        const double kk12 = rate_at(bb12);
        const double kap = kk21 + kk12;

        PopulationTrajectory pt;
        double p1inf = 1.0;
        std::array<double, 2> sx{0.0, 0.0};
        if (kap * t_sim < 1e-12) {
            // No transfer on this trajectory: populations frozen, nothing
            // dissipated.
            pt.dt = out_step;
            pt.p = {std::vector<double>(n_t, 1.0), std::vector<double>(n_t, 0.0)};
        } else {
            RateMatrix rm(2);
            rm.k(1, 0) = kk21;
            rm.k(0, 1) = kk12;
            pt = propagate_populations(rm, {1.0, 0.0}, dt_prop, t_sim, stride);
            if (pt.n_samples() != n_t)
                throw PhysicsError("trajectory lattice mismatch: got " +
                                   std::to_string(pt.n_samples()) + " samples, expected " +
                                   std::to_string(n_t));
            p1inf = kk12 / kap;
            sx = {(1.0 - p1inf) / kap, -(1.0 - p1inf) / kap};
        }

        // One raster buffer per worker; ensembles call this thousands of
        // times and the buffers run to tens of megabytes.
        static thread_local DissipationGrid grid;
        if (method == Method::Density) {
            const std::vector<double> i21 =
                table ? dissipative_potential(*table, bb21, beta, wgrid)
                      : dissipative_potential(*prof, bb21, beta, wgrid);
            const std::vector<double> i12 =
                table ? dissipative_potential(*table, bb12, beta, wgrid)
                      : dissipative_potential(*prof, bb12, beta, wgrid);
            assemble_dimer_grid(wgrid, j_over_w_pref, i21, i12, v, pt, {sx[0], sx[1]}, grid);
        } else {
            const BinnedModeRates br =
                bin_mode_rates(*bins, *bath, l_scale, v, bb21, bb12, beta, *table);
            assemble_mode_grid(*bins, br, pt, {sx[0], sx[1]}, grid);
        }

        std::copy(pt.p[0].begin(), pt.p[0].end(), payload.begin() + off_p1);
        std::copy(pt.p[1].begin(), pt.p[1].end(), payload.begin() + off_p2);
        std::copy(grid.d[0].begin(), grid.d[0].end(), payload.begin() + off_d);
        std::copy(grid.e[0].begin(), grid.e[0].end(), payload.begin() + off_e);
        std::copy(grid.e_inf[0].begin(), grid.e_inf[0].end(), payload.begin() + off_einf);
        payload[off_p1inf] = p1inf;
    }
};

}  // namespace

MqmeOutputs run_mqme(const RunConfig& cfg) {
    const double t0 = now_s();
    MqmeOutputs out;
    const bool dimer = cfg.model == ModelKind::Dimer;
    const double beta = cfg.beta();

    // Bath setup and the slow/fast split.
    const DiscretizedBath full = discretize(cfg.bath, cfg.n_modes, cfg.omega_max_modes);
    const double lambda_modes = full.total_lambda();
    DiscretizedBath active;
    double sigma = 0.0, slow_lambda = 0.0;
    if (cfg.disorder.enabled) {
        TssSplit split = split_time_scales(full, beta, cfg.disorder.omega_star,
                                           cfg.disorder.eta, cfg.disorder.sigma_mode);
        active = std::move(split.fast);
        sigma = split.sigma;
        slow_lambda = split.slow_lambda;
    } else {
        active = full;
    }
    const double lambda_fast = active.total_lambda();

    TrajectoryEngine eng;
    eng.dimer = dimer;
    eng.method = cfg.method;
    eng.beta = beta;
    eng.v = cfg.coupling;
    eng.l_scale = dimer ? 1.0 : 4.0;
    const double bshift = (dimer ? 2.0 : 4.0) * lambda_fast;
    eng.b21 = -cfg.delta_e + bshift;
    eng.b12 = cfg.delta_e + bshift;
    eng.wgrid = cfg.omega_grid();
    eng.bath = &active;

    // e^{-G(t)} with G = (sum of local baths | 4x one shared bath) g(t).
    LineBroadeningBuilder gb(active, beta, cfg.quad.dt);
    std::vector<ProfileTerm> terms{{dimer ? 2.0 : 4.0, &gb}};
    const DecayProfile prof = build_decay_profile(terms, cfg.quad.t_max);
    eng.prof = &prof;
    if (!prof.truncated && prof.tail_ratio > cfg.quad.tail_tol) {
        std::ostringstream w;
        w << "decay profile still at " << prof.tail_ratio
          << " of its peak at t_max = " << cfg.quad.t_max
          << "; transforms may carry truncation ripple";
        out.warnings.push_back(w.str());
    }

    // Frozen gap shifts, drawn up front (the same draws the ensemble would
    // make) so the spectrum window can cover every trajectory.
    std::vector<double> gap_shift;
    double smin = 0.0, smax = 0.0;
    if (cfg.disorder.enabled) {
        gap_shift.resize(cfg.disorder.n_traj);
        for (std::size_t traj = 0; traj < cfg.disorder.n_traj; ++traj) {
            GaussianSampler gauss(trajectory_stream(cfg.seed, traj));
            const auto sh = sample_shifts(cfg.disorder.topology, 2, sigma, gauss);
            gap_shift[traj] = sh[1] - sh[0];
            smin = std::min(smin, gap_shift[traj]);
            smax = std::max(smax, gap_shift[traj]);
        }
    }

    // Evaluator: direct quadrature only for a bare dimer on the density path;
    // everything else reuses one cached spectrum table.
    const bool use_table =
        cfg.method == Method::PerMode || cfg.disorder.enabled || !dimer;
    std::optional<SpectrumTable> table;
    const double t_table0 = now_s();
    if (use_table) {
        double span = eng.wgrid.back();
        if (cfg.method == Method::PerMode) span = std::max(span, cfg.omega_max_modes);
        const double lo = std::min(eng.b21 + smin, eng.b12 - smax) - span - 0.5;
        const double hi = std::max(eng.b21 + smax, eng.b12 - smin) + span + 0.5;
        table.emplace(prof, lo, hi);
        eng.table = &*table;
    }
    const double t_table1 = now_s();

    // Channel prefactor J(w)/w on the grid; one shared bath couples with
    // opposite sign to the two states, which quadruples the weight. With the
    // slow modes frozen out, only the fast remainder (1 - S) J dissipates.
    eng.j_over_w_pref.resize(eng.wgrid.size());
    for (std::size_t i = 0; i < eng.wgrid.size(); ++i) {
        const double w = eng.wgrid[i];
        double fast = 1.0;
        if (cfg.disorder.enabled)
            fast = 1.0 - slow_weight(w, cfg.disorder.omega_star, cfg.disorder.eta);
        eng.j_over_w_pref[i] = (dimer ? 1.0 : 4.0) * fast * cfg.bath(w) / w;
    }
    if (cfg.method == Method::PerMode) eng.bins.emplace(eng.wgrid);

    // Undisordered rates anchor the time horizon and the manifest.
    out.rates.b21 = eng.b21;
    out.rates.b12 = eng.b12;
    out.rates.k21 = eng.rate_at(eng.b21);
    out.rates.k12 = eng.rate_at(eng.b12);
    out.rates.kappa = out.rates.k21 + out.rates.k12;
    if (out.rates.kappa <= 0.0)
        throw PhysicsError("both transfer rates vanished; no relaxation to resolve");
    out.rates.p1_inf = out.rates.k12 / out.rates.kappa;

    double t_sim = cfg.t_sim > 0.0
                       ? cfg.t_sim
                       : std::ceil(30.0 / out.rates.kappa) * (cfg.disorder.enabled ? 1.5 : 1.0);
    double out_step = cfg.out_step;
    constexpr std::size_t kMaxSamples = 4000;
    if (t_sim / out_step > static_cast<double>(kMaxSamples)) {
        out_step = t_sim / static_cast<double>(kMaxSamples);
        std::ostringstream w;
        w << "output lattice widened to " << out_step << " to keep " << kMaxSamples
          << " samples over t_sim = " << t_sim;
        out.warnings.push_back(w.str());
    }
    eng.n_t = static_cast<std::size_t>(std::llround(t_sim / out_step)) + 1;
    eng.t_sim = static_cast<double>(eng.n_t - 1) * out_step;
    eng.out_step = out_step;
    // Keep the integrator comfortably inside its accuracy range even when the
    // output lattice is much coarser than the relaxation time.
    eng.stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(out_step * out.rates.kappa / 0.05)));
    eng.dt_prop = out_step / static_cast<double>(eng.stride);
    eng.layout();
    out.t_sim = eng.t_sim;
    out.out_step = out_step;

    // Run.
    const double t_traj0 = now_s();
    std::vector<double> mean;
    std::vector<double> se;
    std::size_t n_traj = 1;
    if (cfg.disorder.enabled) {
        n_traj = cfg.disorder.n_traj;
        EnsembleResult er = run_ensemble(
            n_traj, eng.size, eng.off_einf, eng.wgrid.size(), cfg.seed, cfg.workers,
            [&](std::size_t traj, GaussianSampler&, std::vector<double>& payload) {
                eng.compute(gap_shift[traj], payload);
            });
        mean = std::move(er.mean);
        se = std::move(er.stderr_of_mean);
    } else {
        mean.resize(eng.size);
        eng.compute(0.0, mean);
    }
    const double t_traj1 = now_s();

    // Unpack.
    const std::size_t nw = eng.wgrid.size();
    out.t.resize(eng.n_t);
    for (std::size_t i = 0; i < eng.n_t; ++i) out.t[i] = static_cast<double>(i) * out_step;
    out.p.assign(2, std::vector<double>(eng.n_t));
    std::copy(mean.begin() + eng.off_p1, mean.begin() + eng.off_p1 + eng.n_t,
              out.p[0].begin());
    std::copy(mean.begin() + eng.off_p2, mean.begin() + eng.off_p2 + eng.n_t,
              out.p[1].begin());
    out.sigma_z.resize(eng.n_t);
    for (std::size_t i = 0; i < eng.n_t; ++i) out.sigma_z[i] = out.p[0][i] - out.p[1][i];

    const std::size_t channels = dimer ? 2 : 1;
    out.grid.omega = eng.wgrid;
    out.grid.t_step = out_step;
    out.grid.n_t = eng.n_t;
    out.grid.d.assign(channels, std::vector<double>(mean.begin() + eng.off_d,
                                                    mean.begin() + eng.off_d + nw * eng.n_t));
    out.grid.e.assign(channels, std::vector<double>(mean.begin() + eng.off_e,
                                                    mean.begin() + eng.off_e + nw * eng.n_t));
    out.grid.e_inf.assign(channels,
                          std::vector<double>(mean.begin() + eng.off_einf,
                                              mean.begin() + eng.off_einf + nw));
    out.e_inf_se = std::move(se);
    out.sigma_shift = sigma;
    out.lambda_fast = lambda_fast;
    const double p1inf_mean = mean[eng.off_p1inf];

    // Energy bookkeeping: the grid integral of the steady spectra against the
    // net energy released by the population transfer.
    std::vector<double> e_inf_total(nw);
    for (std::size_t i = 0; i < nw; ++i)
        e_inf_total[i] = static_cast<double>(channels) * out.grid.e_inf[0][i];
    out.conservation.checked = cfg.delta_e != 0.0;
    out.conservation.integral = trapezoid(eng.wgrid, e_inf_total);
    out.conservation.expected = cfg.delta_e * (1.0 - p1inf_mean);
    out.conservation.rel_err =
        out.conservation.expected != 0.0
            ? std::abs(out.conservation.integral - out.conservation.expected) /
                  std::abs(out.conservation.expected)
            : 0.0;

    // Manifest.
    nlohmann::json m;
    m["tool"] = {{"name", "qdiss"}, {"version", kVersion}};
    m["config"] = resolved_json(cfg);
    m["resolved"] = {
        {"t_sim", eng.t_sim},
        {"out_step", out_step},
        {"n_samples", eng.n_t},
        {"propagation_dt", eng.dt_prop},
        {"evaluator", use_table ? "table" : "direct"},
        {"omega_points", nw},
        {"channels", channels},
        {"rates",
         {{"k21", out.rates.k21},
          {"k12", out.rates.k12},
          {"kappa", out.rates.kappa},
          {"p1_inf", out.rates.p1_inf},
          {"b21", eng.b21},
          {"b12", eng.b12}}},
        {"bath",
         {{"lambda_nominal", cfg.bath.lambda},
          {"lambda_modes", lambda_modes},
          {"lambda_fast", lambda_fast},
          {"lambda_slow", slow_lambda},
          {"sigma_shift", sigma}}},
        {"profile",
         {{"n_points", prof.phi.size()},
          {"truncated", prof.truncated},
          {"tail_ratio", prof.tail_ratio}}}};
    if (cfg.disorder.enabled)
        m["ensemble"] = {{"n_traj", n_traj},
                         {"seed", cfg.seed},
                         {"gap_shift_min", smin},
                         {"gap_shift_max", smax}};
    m["conservation"] = {{"checked", out.conservation.checked},
                         {"integral", out.conservation.integral},
                         {"expected", out.conservation.expected},
                         {"rel_err", out.conservation.rel_err}};
    m["warnings"] = out.warnings;
    m["timings_s"] = {{"setup", t_table0 - t0},
                      {"spectrum_table", t_table1 - t_table0},
                      {"trajectories", t_traj1 - t_traj0},
                      {"total", now_s() - t0}};
    out.manifest = std::move(m);
    return out;
}

HeomRunOutputs run_heom(const RunConfig& cfg) {
    if (cfg.bath.kind != BsdKind::DrudeLorentz)
        throw ConfigError("the benchmark propagation supports the Drude-Lorentz bath only");
    if (!cfg.heom.present) throw ConfigError("method \"heom\" needs a heom section");
    const double t0 = now_s();

    HeomModel model;
    model.e1 = cfg.delta_e;
    model.e2 = 0.0;
    model.v = cfg.coupling;
    model.lambda = cfg.bath.lambda;
    model.omega_c = cfg.bath.omega_c;

    HeomParams par;
    par.beta = cfg.beta();
    par.n_hier = cfg.heom.n_hier;
    par.n_matsu = cfg.heom.n_matsu;
    par.n_full_matsu = cfg.heom.n_full_matsu;
    par.dt_max = cfg.heom.dt_max;
    par.rel_tol = cfg.heom.rel_tol;
    par.t_sim = cfg.heom.t_sim;
    par.out_step = cfg.heom.out_step;
    par.stiff_exponential = cfg.heom.stiff_exponential;
    par.stiff_threshold = cfg.heom.stiff_threshold;
    par.memory_cap_gb = cfg.heom.memory_cap_gb;

    HeomRunOutputs out;
    out.channel = cfg.heom.channel;
    out.pops = propagate_heom(model, par);
    const double t_pops = now_s();

    double t_scan = t_pops;
    if (!cfg.heom.probe_omegas.empty()) {
        HeomModel probed = model;
        ProbeSpec pr;
        pr.s_bp = cfg.heom.s_bp;
        pr.channel = cfg.heom.channel;
        probed.probe = pr;
        out.scan = probe_scan(probed, par, cfg.bath, cfg.heom.probe_omegas,
                              cfg.heom.stationarity_tol);
        t_scan = now_s();
    }

    nlohmann::json m;
    m["tool"] = {{"name", "qdiss"}, {"version", kVersion}};
    m["config"] = resolved_json(cfg);
    m["hierarchy"] = {{"n_adm", out.pops.n_adm},
                      {"dim", out.pops.dim},
                      {"steps_accepted", out.pops.steps_accepted},
                      {"steps_rejected", out.pops.steps_rejected},
                      {"min_dt", out.pops.min_dt},
                      {"final_trace_err", out.pops.trace_err.back()}};
    if (out.scan) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : out.scan->rows) {
            nlohmann::json jr = {{"omega", r.omega},
                                 {"ok", r.ok},
                                 {"n_levels", r.n_levels}};
            if (r.ok) {
                jr["e_steady"] = r.e_steady;
                jr["drift_slope"] = r.slope;
            } else {
                jr["error"] = r.error;
            }
            rows.push_back(jr);
        }
        m["probe_scan"] = rows;
    }
    m["timings_s"] = {{"populations", t_pops - t0},
                      {"probe_scan", t_scan - t_pops},
                      {"total", now_s() - t0}};
    out.manifest = std::move(m);
    return out;
}

void write_mqme_outputs(const std::string& dir, const MqmeOutputs& out) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_populations_csv(dir + "/populations.csv", out.t, out.p, out.sigma_z);

    // The raster files keep the full frequency resolution but a bounded time
    // axis; the in-memory lattice can run to tens of thousands of samples and
    // repeating every one per frequency row helps nobody.
    constexpr std::size_t kMaxCsvSlices = 201;
    const std::size_t n_t = out.grid.n_t;
    const std::size_t stride = (n_t + kMaxCsvSlices - 1) / kMaxCsvSlices;
    std::vector<std::size_t> keep;
    for (std::size_t it = 0; it < n_t; it += stride) keep.push_back(it);
    if (keep.back() != n_t - 1) keep.push_back(n_t - 1);
    std::vector<double> t_slices(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        t_slices[i] = static_cast<double>(keep[i]) * out.grid.t_step;

    const std::size_t nw = out.grid.omega.size();
    for (std::size_t ch = 0; ch < out.grid.d.size(); ++ch) {
        std::vector<double> d(nw * keep.size()), e(nw * keep.size());
        for (std::size_t iw = 0; iw < nw; ++iw)
            for (std::size_t i = 0; i < keep.size(); ++i) {
                d[iw * keep.size() + i] = out.grid.d_at(ch, iw, keep[i]);
                e[iw * keep.size() + i] = out.grid.e_at(ch, iw, keep[i]);
            }
        write_dissipation_csv(dir + "/dissipation_ch" + std::to_string(ch + 1) + ".csv",
                              out.grid.omega, t_slices, d, e);
        SteadyColumn col;
        col.omega = out.grid.omega;
        col.e_inf = out.grid.e_inf[ch];
        col.se = out.e_inf_se;
        write_steady_csv(dir + "/steady_ch" + std::to_string(ch + 1) + ".csv", col);
    }
    write_manifest(dir + "/manifest.json", out.manifest);
}

void write_heom_outputs(const std::string& dir, const HeomRunOutputs& out) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::vector<double>> p = {out.pops.p1, out.pops.p2};
    std::vector<double> sz(out.pops.t.size());
    for (std::size_t i = 0; i < sz.size(); ++i) sz[i] = out.pops.p1[i] - out.pops.p2[i];
    write_populations_csv(dir + "/populations.csv", out.pops.t, p, sz);

    if (out.scan) {
        const ProbeScanResult& scan = *out.scan;
        std::vector<double> omega_ok;
        for (const auto& r : scan.rows)
            if (r.ok) omega_ok.push_back(r.omega);
        std::vector<double> d, e;
        SteadyColumn col;
        for (const auto& r : scan.rows) {
            if (!r.ok) continue;
            d.insert(d.end(), r.d_t.begin(), r.d_t.end());
            e.insert(e.end(), r.e_t.begin(), r.e_t.end());
            col.omega.push_back(r.omega);
            col.e_inf.push_back(r.e_steady);
        }
        const std::string tag = std::to_string(out.channel + 1);
        if (!omega_ok.empty()) {
            write_dissipation_csv(dir + "/dissipation_ch" + tag + ".csv", omega_ok,
                                  scan.t, d, e);
            write_steady_csv(dir + "/steady_ch" + tag + ".csv", col);
        }
    }
    write_manifest(dir + "/manifest.json", out.manifest);
}

void execute_run(const RunConfig& cfg, const std::string& dir) {
    if (cfg.method == Method::Heom) {
        HeomRunOutputs out = run_heom(cfg);
        write_heom_outputs(dir, out);
        std::printf("%s: hierarchy with %zu rows (dim %zu), %zu steps",
                    cfg.name.c_str(), out.pops.n_adm, out.pops.dim,
                    out.pops.steps_accepted);
        if (out.scan) {
            std::size_t ok = 0;
            for (const auto& r : out.scan->rows) ok += r.ok ? 1 : 0;
            std::printf(", probe scan %zu/%zu frequencies", ok, out.scan->rows.size());
        }
        std::printf("\n  -> %s\n", dir.c_str());
        return;
    }
    MqmeOutputs out = run_mqme(cfg);
    write_mqme_outputs(dir, out);
    std::printf("%s: kappa = %.6g, p1_inf = %.6g, t_sim = %g", cfg.name.c_str(),
                out.rates.kappa, out.rates.p1_inf, out.t_sim);
    if (out.conservation.checked)
        std::printf(", energy closure %.3g%%", 100.0 * out.conservation.rel_err);
    for (const auto& w : out.warnings) std::printf("\n  warning: %s", w.c_str());
    std::printf("\n  -> %s\n", dir.c_str());
}

}  // namespace qdiss
