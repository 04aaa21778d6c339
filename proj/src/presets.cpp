#include <array>

#include "qdiss/config.hpp"
#include "qdiss/errors.hpp"

namespace qdiss {

namespace {

constexpr std::array<const char*, 6> kRoman1 = {"i", "ii", "iii", "iv", "v", "vi"};
constexpr std::array<const char*, 3> kRoman2 = {"i", "ii", "iii"};

struct DimerCondition {
    double lambda, temperature;
    double dt_max;
    std::size_t n_hier, n_matsu;
    double s_bp;
};

// The six dimer operating points, ordered by increasing coupling then
// decreasing temperature, with the benchmark settings that converge at each.
constexpr std::array<DimerCondition, 6> kDimer = {{
    {0.05, 1.0, 0.02, 4, 30, 2e-6},
    {0.2, 1.0, 0.1, 7, 30, 1e-5},
    {1.0, 1.0, 0.05, 10, 30, 1e-5},
    {2.0, 1.0, 0.05, 13, 30, 1e-5},
    {0.2, 0.5, 0.1, 7, 100, 1e-5},
    {0.2, 0.25, 0.1, 7, 100, 1e-5},
}};

struct SpinBosonCondition {
    double lambda;
    double dt_max;
    std::size_t n_hier;
    double s_bp;
};

constexpr std::array<SpinBosonCondition, 3> kSpinBoson = {{
    {0.05, 0.01, 5, 2e-6},
    {0.25, 0.05, 7, 1e-5},
    {1.0, 0.05, 12, 1e-5},
}};

constexpr std::array<const char*, 3> kGammaTag = {"005", "025", "1"};
constexpr std::array<double, 3> kGamma = {0.05, 0.25, 1.0};

RunConfig dimer_preset(std::size_t cond, int de) {
    const DimerCondition& c = kDimer[cond];
    RunConfig cfg;
    cfg.name = std::string("table1_cond_") + kRoman1[cond] + "_dE" + std::to_string(de);
    cfg.model = ModelKind::Dimer;
    cfg.bath = drude_lorentz(c.lambda, 0.5);
    cfg.temperature = c.temperature;
    cfg.coupling = 0.25;
    cfg.delta_e = static_cast<double>(de);
    cfg.n_modes = 2000;
    cfg.omega_max_modes = 15.0;
    cfg.method = Method::Density;
    cfg.disorder.enabled = false;
    cfg.disorder.eta = 0.99;
    cfg.disorder.omega_star = 0.2;
    cfg.disorder.n_traj = c.lambda == 0.05 ? 10000 : 1000;
    cfg.disorder.topology = DisorderTopology::IndependentPerState;
    cfg.heom.present = true;
    cfg.heom.dt_max = c.dt_max;
    cfg.heom.n_hier = c.n_hier;
    cfg.heom.n_matsu = c.n_matsu;
    cfg.heom.s_bp = c.s_bp;
    return cfg;
}

RunConfig spin_boson_preset(std::size_t cond, std::size_t ig) {
    const SpinBosonCondition& c = kSpinBoson[cond];
    RunConfig cfg;
    cfg.name = std::string("table2_cond_") + kRoman2[cond] + "_gamma" + kGammaTag[ig];
    cfg.model = ModelKind::SpinBoson;
    cfg.bath = brownian(c.lambda, 2.062, kGamma[ig]);
    cfg.temperature = 1.0;
    cfg.coupling = 0.25;
    cfg.delta_e = 2.0;
    cfg.n_modes = 5000;
    cfg.omega_max_modes = 15.0;
    cfg.grid_min = 0.1;
    cfg.grid_max = 3.0;
    cfg.grid_step = 0.05;
    cfg.refine = {{1.9, 2.2, 0.005}};
    cfg.method = Method::PerMode;
    cfg.disorder.enabled = false;
    cfg.disorder.eta = 0.6;
    cfg.disorder.omega_star = 0.2;
    cfg.disorder.n_traj = 1000;
    cfg.disorder.topology = DisorderTopology::AntiCorrelated;
    // The hierarchy benchmark implemented here handles the Drude-Lorentz bath
    // only, so these presets carry no benchmark section.
    return cfg;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < kDimer.size(); ++c)
        for (int de = 0; de <= 2; ++de)
            out.push_back(std::string("table1_cond_") + kRoman1[c] + "_dE" +
                          std::to_string(de));
    for (std::size_t c = 0; c < kSpinBoson.size(); ++c)
        for (std::size_t g = 0; g < kGamma.size(); ++g)
            out.push_back(std::string("table2_cond_") + kRoman2[c] + "_gamma" + kGammaTag[g]);
    return out;
}

bool is_preset(const std::string& name) {
    for (const auto& n : preset_names())
        if (n == name) return true;
    return false;
}

RunConfig preset(const std::string& name) {
    for (std::size_t c = 0; c < kDimer.size(); ++c)
        for (int de = 0; de <= 2; ++de)
            if (name == std::string("table1_cond_") + kRoman1[c] + "_dE" + std::to_string(de))
                return dimer_preset(c, de);
    for (std::size_t c = 0; c < kSpinBoson.size(); ++c)
        for (std::size_t g = 0; g < kGamma.size(); ++g)
            if (name == std::string("table2_cond_") + kRoman2[c] + "_gamma" + kGammaTag[g])
                return spin_boson_preset(c, g);
    throw ConfigError("unknown preset \"" + name + "\"; see `qdiss presets list`");
}

}  // namespace qdiss
