#pragma once

// Command-line front end: load a config (or a results file's embedded
// config), apply flag overrides, run, write results.
//
// Exit codes: 0 success, 2 usage or config error, 3 runtime failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dqt/cli_io.hpp"

namespace dqt {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_runtime = 3;

struct CliOverrides {
    std::string config_path;
    std::optional<std::string> method;
    std::optional<std::uint64_t> trajectories;
    std::optional<std::uint64_t> seed;
    std::optional<int> truncation;
    std::optional<double> dt;
    std::optional<double> t_max;
    std::optional<std::string> output;
    std::optional<int> workers;
    std::string checkpoint;
};

inline void apply_overrides(RunConfig& c, const CliOverrides& o, std::ostream& log) {
    auto note = [&](const char* key, const auto& value) { log << "override " << key << " = " << value << '\n'; };
    if (o.method) {
        c.method.name = *o.method;
        note("method.name", *o.method);
    }
    if (o.trajectories) {
        c.ensemble.trajectories = *o.trajectories;
        note("ensemble.trajectories", *o.trajectories);
    }
    if (o.seed) {
        c.ensemble.seed = *o.seed;
        note("ensemble.seed", *o.seed);
    }
    if (o.truncation) {
        c.method.truncation = *o.truncation;
        note("method.truncation", *o.truncation);
    }
    if (o.dt) {
        c.method.dt = *o.dt;
        note("method.dt", *o.dt);
    }
    if (o.t_max) {
        c.method.t_max = *o.t_max;
        note("method.t_max", *o.t_max);
    }
    if (o.output) {
        c.output.path = *o.output;
        note("output.path", *o.output);
    }
    if (o.workers) {
        c.ensemble.workers = *o.workers;
        note("ensemble.workers", *o.workers);
    }
    validate(c);
}

/// Runs the configured method and returns the series to be written.
inline ResultSeries execute(const RunConfig& c, const std::string& checkpoint_path = {}) {
    const SystemModel model = build_system(c);
    const DiscretizedBath bath = build_bath(c);
    if (c.method.name == "ed") {
        EDConfig e = ed_config(c);
        e.checkpoint_path = checkpoint_path;
        return to_series(propagate_ed(model.initial_state, e, model, bath));
    }
    EnsembleConfig ec;
    ec.trajectories = c.ensemble.trajectories;
    ec.master_seed = c.ensemble.seed;
    ec.batches = c.ensemble.batches;
    ec.workers = c.ensemble.workers;
    return to_series(run_ensemble(DressedPropagator(model, bath, propagator_config(c)), ec));
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Dressed quantum trajectory simulator for a driven qubit in a bosonic bath"};
    app.set_version_flag("--version", "dqt_sim 1.0");
    CliOverrides o;
    app.add_option("--config", o.config_path, "JSON config file, or a results file to regenerate")->required();
    app.add_option("--method", o.method, "dressed | linear | ed")
        ->check(CLI::IsMember({"dressed", "linear", "ed"}));
    app.add_option("--trajectories", o.trajectories, "number of Monte Carlo trajectories M");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--truncation", o.truncation, "virtual-quanta cutoff n (dressed, linear) or excitation cutoff K (ed)");
    app.add_option("--dt", o.dt, "time step");
    app.add_option("--t-max", o.t_max, "final time");
    app.add_option("--output", o.output, "results file path");
    app.add_option("--workers", o.workers, "worker threads for the ensemble");
    app.add_option("--checkpoint", o.checkpoint, "ed progress file, rewritten periodically");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return exit_config;
    }

    RunConfig cfg;
    try {
        cfg = load_config(o.config_path);
        apply_overrides(cfg, o, err);
    } catch (const InvalidInput& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }

    try {
        const ResultSeries series = execute(cfg, o.checkpoint);
        write_results(series, to_json(cfg), cfg.output.path, cfg.output.format);
        if (series.num_degenerate > 0) {
            err << "warning: " << series.num_degenerate << " degenerate trajectories excluded\n";
        }
        err << "wrote " << cfg.output.path << '\n';
    } catch (const InvalidInput& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_ok;
}

} // namespace dqt
