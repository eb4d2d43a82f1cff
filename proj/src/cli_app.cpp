#include "bgk/cli_app.hpp"

#include "bgk/config.hpp"
#include "bgk/output.hpp"
#include "bgk/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <optional>
#include <string>

namespace bgk {

namespace {

using nlohmann::json;

int exit_code_for(std::string_view category)
{
    if (category == "config" || category == "shape" || category == "degenerate")
        return exit_config;
    if (category == "io")
        return exit_io;
    return exit_solver;
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

int cmd_check(const std::string& path, std::ostream& out)
{
    out << echo_config(load_config(path));
    return exit_ok;
}

int cmd_solve_target(const std::string& path, std::ostream& out)
{
    const RunConfig cfg = load_config(path);
    const MixtureState state = build_initial_state(cfg);
    const TargetSet targets = build_targets(state, cfg.newton);
    const std::size_t n = state.size();
    json pairs = json::array();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            json p = {{"pair", {i + 1, j + 1}},
                      {"species", {state.species[i].name, state.species[j].name}},
                      {"residual", targets.residual(i, j)},
                      {"iterations", targets.iterations[i * n + j]}};
            if (i == j) {
                const Multipliers& m = targets.intra[i];
                p["lambda0"] = m.lambda0;
                p["lambda1"] = vec_json(m.lambda1);
                p["lambda2"] = m.lambda2;
            }
            else {
                const MixedMultipliers& m = *targets.inter[i * n + j];
                p["lambda0"] = {m.lambda0_first, m.lambda0_second};
                p["lambda1"] = vec_json(m.lambda1);
                p["lambda2"] = m.lambda2;
            }
            pairs.push_back(p);
        }
    out << json{{"targets", pairs}}.dump(2) << "\n";
    return exit_ok;
}

int cmd_run(const std::string& path, const std::optional<std::string>& output_override, std::ostream& out,
            std::ostream& err)
{
    RunConfig cfg = load_config(path);
    if (output_override)
        cfg.output.timeseries = *output_override;
    const MixtureState initial = build_initial_state(cfg);

    SimulationOptions opt;
    opt.dt = cfg.time.dt ? *cfg.time.dt : default_time_step(initial);
    opt.t_final = cfg.time.t_final;
    opt.scheme = cfg.time.scheme;
    opt.newton = cfg.newton;
    opt.record_every = cfg.output.interval;

    TimeseriesWriter writer(cfg.output.timeseries, initial.size());
    auto observer = [&](const MixtureState&, const TargetSet&, const DiagnosticsRecord& rec) {
        writer.write(rec);
        for (const std::string& w : rec.warnings)
            err << "warning: t=" << rec.t << ": " << w << "\n";
    };
    MixtureState final_state;
    const std::vector<DiagnosticsRecord> records = simulate(initial, opt, observer, &final_state);

    if (cfg.output.snapshot)
        for (std::size_t i = 0; i < final_state.size(); ++i)
            write_snapshot(cfg.output.snapshot_prefix + "_" + final_state.species[i].name + ".bin", final_state.f[i],
                           *final_state.grid);

    json summary = {{"records", records.size()},
                    {"t", records.back().t},
                    {"dt", opt.dt},
                    {"scheme", to_string(opt.scheme)},
                    {"timeseries", cfg.output.timeseries.string()}};
    if (records.size() >= 2) {
        const ConservationSummary c = conservation_report(records);
        summary["max_conservation_drift"] = c.max_drift();
    }
    out << summary.dump() << "\n";
    return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Space-homogeneous multi-species BGK relaxation", "bgkmix"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> output_override;
    auto* run = app.add_subcommand("run", "Relax a mixture and write the diagnostics time series");
    run->add_option("config", config_path, "JSON configuration file")->required();
    run->add_option("-o,--output", output_override, "Override output.timeseries");
    auto* check = app.add_subcommand("check-config", "Validate a configuration and print it with defaults");
    check->add_option("config", config_path, "JSON configuration file")->required();
    auto* solve = app.add_subcommand("solve-target", "Solve the target multipliers of the initial state");
    solve->add_option("config", config_path, "JSON configuration file")->required();
    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    }
    catch (const CLI::ParseError& e) {
        err << "error[usage]: " << e.what() << "\n";
        return exit_config;
    }

    try {
        if (*version) {
            out << "bgkmix " << kVersion << "\n";
            return exit_ok;
        }
        if (*check)
            return cmd_check(config_path, out);
        if (*solve)
            return cmd_solve_target(config_path, out);
        return cmd_run(config_path, output_override, out, err);
    }
    catch (const Error& e) {
        err << "error[" << e.category() << "]: " << e.what() << "\n";
        return exit_code_for(e.category());
    }
    catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << "\n";
        return exit_internal;
    }
}

} // namespace bgk
