#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "qdiss/config.hpp"
#include "qdiss/errors.hpp"
#include "qdiss/output.hpp"
#include "qdiss/pipeline.hpp"
#include "qdiss/version.hpp"

namespace {

qdiss::RunConfig resolve_config(const std::string& arg) {
    if (std::filesystem::exists(arg)) return qdiss::load_config_file(arg);
    if (qdiss::is_preset(arg)) return qdiss::preset(arg);
    throw qdiss::ConfigError("\"" + arg +
                             "\" is neither a config file nor a preset; see `qdiss "
                             "presets list`");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipation decomposition for open two-state systems"};
    app.set_version_flag("--version", qdiss::kVersion);
    app.require_subcommand(1);

    // run
    std::string run_target, out_dir, method_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int workers = 0;
    bool tss = false;
    CLI::App* run = app.add_subcommand("run", "Run a config file or preset");
    run->add_option("config", run_target, "Config file path or preset name")->required();
    run->add_option("--out", out_dir, "Output directory (default out_<name>)");
    run->add_option("--method", method_override,
                    "Override the decomposition method: density, per_mode or heom");
    run->add_option("--seed", seed_override, "Override the ensemble seed")
        ->each([&](const std::string&) { seed_given = true; });
    run->add_option("--workers", workers, "Worker threads for ensembles");
    run->add_flag("--tss", tss, "Enable the static disorder ensemble");

    // compare
    std::string dir_a, dir_b, json_out;
    bool interp = false;
    CLI::App* cmp = app.add_subcommand("compare", "Compare two run directories");
    cmp->add_option("dir_a", dir_a, "First run directory")->required();
    cmp->add_option("dir_b", dir_b, "Second run directory")->required();
    cmp->add_flag("--interp", interp,
                  "Interpolate the second run onto the first run's grid");
    cmp->add_option("--json", json_out, "Also write the comparison as JSON");

    // presets
    CLI::App* pre = app.add_subcommand("presets", "Preset management");
    CLI::App* pre_list = pre->add_subcommand("list", "List compiled-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            qdiss::RunConfig cfg = resolve_config(run_target);
            if (!method_override.empty()) {
                if (method_override == "density")
                    cfg.method = qdiss::Method::Density;
                else if (method_override == "per_mode")
                    cfg.method = qdiss::Method::PerMode;
                else if (method_override == "heom")
                    cfg.method = qdiss::Method::Heom;
                else
                    throw qdiss::ConfigError("--method must be density, per_mode or heom");
            }
            if (seed_given) cfg.seed = seed_override;
            if (workers > 0) cfg.workers = workers;
            if (tss) cfg.disorder.enabled = true;
            if (cfg.method == qdiss::Method::Heom && !cfg.heom.present)
                throw qdiss::ConfigError(
                    "this configuration carries no heom section to run");
            const std::string dir = out_dir.empty() ? "out_" + cfg.name : out_dir;
            qdiss::execute_run(cfg, dir);
        } else if (cmp->parsed()) {
            qdiss::CompareReport rep = qdiss::compare_runs(dir_a, dir_b, interp);
            std::printf("%s", rep.format().c_str());
            if (!json_out.empty()) qdiss::write_manifest(json_out, rep.to_json());
        } else if (pre->parsed()) {
            if (!pre_list->parsed())
                throw qdiss::ConfigError("usage: qdiss presets list");
            for (const auto& name : qdiss::preset_names()) std::printf("%s\n", name.c_str());
        }
    } catch (const qdiss::PhysicsError& ex) {
        std::fprintf(stderr, "physics error: %s\n", ex.what());
        return 1;
    } catch (const qdiss::ConfigError& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
