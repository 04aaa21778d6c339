#include "qdiss/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qdiss/errors.hpp"

namespace qdiss {

const char* to_string(ModelKind m) {
    return m == ModelKind::Dimer ? "dimer" : "spin_boson";
}
const char* to_string(Method m) {
    switch (m) {
        case Method::Density: return "density";
        case Method::PerMode: return "per_mode";
        default: return "heom";
    }
}
const char* to_string(DisorderTopology t) {
    return t == DisorderTopology::IndependentPerState ? "independent" : "anticorrelated";
}
const char* to_string(SigmaMode m) {
    return m == SigmaMode::Verbatim ? "verbatim" : "sqrt";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

// Tracks key consumption in one JSON object so leftovers can be reported by
// their full path.
class Node {
public:
    Node(const nlohmann::json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "expected an object");
    }

    std::string key_path(const std::string& k) const {
        return path_.empty() ? k : path_ + "." + k;
    }
    bool has(const std::string& k) const { return j_->contains(k); }

    double num(const std::string& k, double fallback) {
        if (!has(k)) return fallback;
        return num(k);
    }
    double num(const std::string& k) {
        const nlohmann::json& v = get(k);
        if (!v.is_number()) fail(key_path(k), "expected a number");
        return v.get<double>();
    }
    std::size_t uint(const std::string& k, std::size_t fallback) {
        if (!has(k)) return fallback;
        const nlohmann::json& v = get(k);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            fail(key_path(k), "expected a non-negative integer");
        return v.get<std::size_t>();
    }
    bool flag(const std::string& k, bool fallback) {
        if (!has(k)) return fallback;
        const nlohmann::json& v = get(k);
        if (!v.is_boolean()) fail(key_path(k), "expected true or false");
        return v.get<bool>();
    }
    std::string str(const std::string& k, const std::string& fallback) {
        if (!has(k)) return fallback;
        return str(k);
    }
    std::string str(const std::string& k) {
        const nlohmann::json& v = get(k);
        if (!v.is_string()) fail(key_path(k), "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> num_array(const std::string& k) {
        const nlohmann::json& v = get(k);
        if (!v.is_array()) fail(key_path(k), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key_path(k), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    Node child(const std::string& k) { return Node(get(k), key_path(k)); }
    const nlohmann::json& raw(const std::string& k) { return get(k); }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!used_.count(it.key()))
                fail(key_path(it.key()), "unknown key");
    }

private:
    const nlohmann::json& get(const std::string& k) {
        auto it = j_->find(k);
        if (it == j_->end()) fail(key_path(k), "missing required key");
        used_.insert(k);
        return *it;
    }

    const nlohmann::json* j_;
    std::string path_;
    std::set<std::string> used_;
};

ModelKind parse_model(const std::string& s, const std::string& path) {
    if (s == "dimer") return ModelKind::Dimer;
    if (s == "spin_boson") return ModelKind::SpinBoson;
    fail(path, "model must be \"dimer\" or \"spin_boson\", got \"" + s + "\"");
}

Method parse_method(const std::string& s, const std::string& path) {
    if (s == "density") return Method::Density;
    if (s == "per_mode") return Method::PerMode;
    if (s == "heom") return Method::Heom;
    fail(path, "method must be \"density\", \"per_mode\" or \"heom\", got \"" + s + "\"");
}

}  // namespace

std::vector<double> RunConfig::omega_grid() const {
    std::vector<double> pts;
    auto emit = [&pts](double lo, double hi, double step) {
        if (step <= 0.0 || hi < lo) throw ConfigError("omega grid needs step > 0 and max >= min");
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) pts.push_back(lo + static_cast<double>(i) * step);
    };
    emit(grid_min, grid_max, grid_step);
    for (const auto& r : refine) emit(r.min, r.max, r.step);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double w : pts) {
        if (w <= 0.0) throw ConfigError("omega grid must be strictly positive");
        if (out.empty() || w - out.back() > 1e-9) out.push_back(w);
    }
    return out;
}

RunConfig parse_run_config(const nlohmann::json& doc, const std::string& name) {
    Node root(doc, "");
    RunConfig cfg;
    cfg.name = root.str("name", name);
    cfg.model = parse_model(root.str("model"), "model");

    // Model-dependent defaults mirror the reference study setups.
    const bool sb = cfg.model == ModelKind::SpinBoson;
    if (sb) {
        cfg.bath = brownian(0.25, 2.062, 0.25);
        cfg.n_modes = 5000;
        cfg.grid_min = 0.1;
        cfg.grid_max = 3.0;
        cfg.grid_step = 0.05;
        cfg.refine = {{1.9, 2.2, 0.005}};
        cfg.method = Method::PerMode;
        cfg.disorder.topology = DisorderTopology::AntiCorrelated;
        cfg.disorder.eta = 0.6;
        cfg.delta_e = 2.0;
    } else {
        cfg.bath = drude_lorentz(0.2, 0.5);
    }

    if (root.has("bath")) {
        Node b = root.child("bath");
        const std::string kind = b.str("kind", sb ? "brownian" : "drude_lorentz");
        if (kind == "drude_lorentz") {
            cfg.bath = drude_lorentz(b.num("lambda", cfg.bath.lambda),
                                     b.num("omega_c", 0.5));
        } else if (kind == "brownian") {
            cfg.bath = brownian(b.num("lambda", cfg.bath.lambda),
                                b.num("omega_0", 2.062), b.num("gamma", 0.25));
        } else {
            fail(b.key_path("kind"), "bath kind must be \"drude_lorentz\" or \"brownian\"");
        }
        b.finish();
    }

    cfg.temperature = root.num("temperature", cfg.temperature);
    if (cfg.temperature <= 0.0) fail("temperature", "must be positive");
    cfg.coupling = root.num("coupling", cfg.coupling);
    cfg.delta_e = root.num("delta_e", cfg.delta_e);

    if (root.has("modes")) {
        Node m = root.child("modes");
        cfg.n_modes = m.uint("count", cfg.n_modes);
        cfg.omega_max_modes = m.num("omega_max", cfg.omega_max_modes);
        m.finish();
    }

    if (root.has("omega_grid")) {
        Node g = root.child("omega_grid");
        cfg.grid_min = g.num("min", cfg.grid_min);
        cfg.grid_max = g.num("max", cfg.grid_max);
        cfg.grid_step = g.num("step", cfg.grid_step);
        if (g.has("refine")) {
            cfg.refine.clear();
            const nlohmann::json& arr = g.raw("refine");
            if (!arr.is_array()) fail(g.key_path("refine"), "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Node r(arr[i], g.key_path("refine") + "[" + std::to_string(i) + "]");
                cfg.refine.push_back({r.num("min"), r.num("max"), r.num("step")});
                r.finish();
            }
        }
        g.finish();
    }

    if (root.has("quadrature")) {
        Node q = root.child("quadrature");
        cfg.quad.dt = q.num("dt", cfg.quad.dt);
        cfg.quad.t_max = q.num("t_max", cfg.quad.t_max);
        cfg.quad.tail_tol = q.num("tail_tol", cfg.quad.tail_tol);
        q.finish();
        if (cfg.quad.dt <= 0.0 || cfg.quad.t_max <= cfg.quad.dt)
            fail("quadrature", "needs dt > 0 and t_max > dt");
    }

    if (root.has("method")) cfg.method = parse_method(root.str("method"), "method");

    if (root.has("disorder")) {
        Node d = root.child("disorder");
        cfg.disorder.enabled = d.flag("enabled", true);
        cfg.disorder.eta = d.num("eta", cfg.disorder.eta);
        cfg.disorder.omega_star = d.num("omega_star", cfg.disorder.omega_star);
        cfg.disorder.n_traj = d.uint("n_traj", cfg.disorder.n_traj);
        if (d.has("topology")) {
            const std::string t = d.str("topology");
            if (t == "independent")
                cfg.disorder.topology = DisorderTopology::IndependentPerState;
            else if (t == "anticorrelated")
                cfg.disorder.topology = DisorderTopology::AntiCorrelated;
            else
                fail(d.key_path("topology"),
                     "topology must be \"independent\" or \"anticorrelated\"");
        }
        if (d.has("sigma_mode")) {
            const std::string s = d.str("sigma_mode");
            if (s == "verbatim")
                cfg.disorder.sigma_mode = SigmaMode::Verbatim;
            else if (s == "sqrt")
                cfg.disorder.sigma_mode = SigmaMode::Sqrt;
            else
                fail(d.key_path("sigma_mode"), "sigma_mode must be \"verbatim\" or \"sqrt\"");
        }
        d.finish();
        if (cfg.disorder.enabled) {
            if (!(cfg.disorder.eta >= 0.0 && cfg.disorder.eta <= 1.0))
                fail("disorder.eta", "must lie in [0, 1]");
            if (cfg.disorder.n_traj == 0) fail("disorder.n_traj", "must be positive");
        }
    }

    cfg.seed = root.uint("seed", cfg.seed);
    cfg.t_sim = root.num("t_sim", cfg.t_sim);
    cfg.out_step = root.num("out_step", cfg.out_step);
    if (cfg.out_step <= 0.0) fail("out_step", "must be positive");
    cfg.workers = static_cast<int>(root.uint("workers", 0));

    if (root.has("heom")) {
        Node h = root.child("heom");
        cfg.heom.present = true;
        cfg.heom.n_hier = h.uint("n_hier", cfg.heom.n_hier);
        cfg.heom.n_matsu = h.uint("n_matsu", cfg.heom.n_matsu);
        cfg.heom.n_full_matsu = h.uint("n_full_matsu", cfg.heom.n_full_matsu);
        cfg.heom.dt_max = h.num("dt_max", cfg.heom.dt_max);
        cfg.heom.rel_tol = h.num("rel_tol", cfg.heom.rel_tol);
        cfg.heom.t_sim = h.num("t_sim", cfg.heom.t_sim);
        cfg.heom.out_step = h.num("out_step", cfg.heom.out_step);
        cfg.heom.s_bp = h.num("s_bp", cfg.heom.s_bp);
        cfg.heom.channel = static_cast<int>(h.uint("channel", 0));
        if (h.has("probe_omegas")) cfg.heom.probe_omegas = h.num_array("probe_omegas");
        cfg.heom.stationarity_tol = h.num("stationarity_tol", cfg.heom.stationarity_tol);
        cfg.heom.memory_cap_gb = h.num("memory_cap_gb", cfg.heom.memory_cap_gb);
        cfg.heom.stiff_exponential = h.flag("stiff_exponential", true);
        cfg.heom.stiff_threshold = h.num("stiff_threshold", cfg.heom.stiff_threshold);
        h.finish();
    }

    root.finish();

    if (cfg.n_modes == 0) fail("modes.count", "must be positive");
    if (cfg.coupling == 0.0) fail("coupling", "must be nonzero");
    if (cfg.method == Method::Heom && !cfg.heom.present)
        fail("heom", "method \"heom\" needs a heom section");
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("cannot parse " + path + ": " + ex.what());
    }
    std::string stem = path;
    if (auto p = stem.find_last_of('/'); p != std::string::npos) stem = stem.substr(p + 1);
    if (auto p = stem.rfind(".json"); p != std::string::npos) stem = stem.substr(0, p);
    return parse_run_config(doc, stem);
}

nlohmann::json resolved_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["name"] = cfg.name;
    j["model"] = to_string(cfg.model);
    nlohmann::json b;
    if (cfg.bath.kind == BsdKind::DrudeLorentz) {
        b["kind"] = "drude_lorentz";
        b["lambda"] = cfg.bath.lambda;
        b["omega_c"] = cfg.bath.omega_c;
    } else {
        b["kind"] = "brownian";
        b["lambda"] = cfg.bath.lambda;
        b["omega_0"] = cfg.bath.omega_0;
        b["gamma"] = cfg.bath.gamma;
    }
    j["bath"] = b;
    j["temperature"] = cfg.temperature;
    j["coupling"] = cfg.coupling;
    j["delta_e"] = cfg.delta_e;
    j["modes"] = {{"count", cfg.n_modes}, {"omega_max", cfg.omega_max_modes}};
    nlohmann::json g = {{"min", cfg.grid_min}, {"max", cfg.grid_max}, {"step", cfg.grid_step}};
    if (!cfg.refine.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : cfg.refine)
            arr.push_back({{"min", r.min}, {"max", r.max}, {"step", r.step}});
        g["refine"] = arr;
    }
    j["omega_grid"] = g;
    j["quadrature"] = {{"dt", cfg.quad.dt},
                       {"t_max", cfg.quad.t_max},
                       {"tail_tol", cfg.quad.tail_tol}};
    j["method"] = to_string(cfg.method);
    j["disorder"] = {{"enabled", cfg.disorder.enabled},
                     {"eta", cfg.disorder.eta},
                     {"omega_star", cfg.disorder.omega_star},
                     {"n_traj", cfg.disorder.n_traj},
                     {"topology", to_string(cfg.disorder.topology)},
                     {"sigma_mode", to_string(cfg.disorder.sigma_mode)}};
    j["seed"] = cfg.seed;
    j["t_sim"] = cfg.t_sim;
    j["out_step"] = cfg.out_step;
    if (cfg.heom.present) {
        j["heom"] = {{"n_hier", cfg.heom.n_hier},
                     {"n_matsu", cfg.heom.n_matsu},
                     {"n_full_matsu", cfg.heom.n_full_matsu},
                     {"dt_max", cfg.heom.dt_max},
                     {"rel_tol", cfg.heom.rel_tol},
                     {"t_sim", cfg.heom.t_sim},
                     {"out_step", cfg.heom.out_step},
                     {"s_bp", cfg.heom.s_bp},
                     {"channel", cfg.heom.channel},
                     {"probe_omegas", cfg.heom.probe_omegas},
                     {"stationarity_tol", cfg.heom.stationarity_tol},
                     {"memory_cap_gb", cfg.heom.memory_cap_gb},
                     {"stiff_exponential", cfg.heom.stiff_exponential},
                     {"stiff_threshold", cfg.heom.stiff_threshold}};
    }
    return j;
}

}  // namespace qdiss
