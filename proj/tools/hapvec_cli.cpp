// Command-line front end: analyze one scenario, sweep a parameter grid, or
// validate the analytical model against the event simulation.  Emits CSV to
// --out (or stdout).  Exit codes: 0 success, 1 validation error, 2
// infeasible scenario (analyze only), 3 I/O error.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hapvec/config_io.hpp"
#include "hapvec/errors.hpp"
#include "hapvec/runner.hpp"

namespace {

hapvec::Experiment resolve_experiment(const std::string& config_path,
                                      const std::string& preset) {
    if (!config_path.empty() && !preset.empty()) {
        throw hapvec::ValidationError("--config and --preset are mutually exclusive");
    }
    if (!preset.empty()) {
        return hapvec::preset_experiment(preset);
    }
    if (!config_path.empty()) {
        return hapvec::load_experiment(config_path);
    }
    return hapvec::Experiment{hapvec::default_scenario(), std::nullopt};
}

void write_output(const std::string& out_path,
                  const std::function<void(std::ostream&)>& emit) {
    if (out_path.empty()) {
        emit(std::cout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw hapvec::IoError("output: cannot open " + out_path + " for writing");
    }
    emit(out);
    out.flush();
    if (!out) {
        throw hapvec::IoError("output: failed writing " + out_path);
    }
}

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string mode = "analytical";
    std::string preset;
    std::uint64_t seed = 1;
    std::uint64_t frames = 1000000;
};

void add_common_options(CLI::App* cmd, CommonOptions* opts) {
    cmd->add_option("--config", opts->config_path,
                    "JSON scenario (or scenario+sweep) config file");
    cmd->add_option("--out", opts->out_path, "Output CSV path (default: stdout)");
    cmd->add_option("--seed", opts->seed, "Root seed for simulation runs");
    cmd->add_option("--mode", opts->mode,
                    "Columns to compute: analytical, simulate, or both");
    cmd->add_option("--preset", opts->preset,
                    "Bundled experiment: default, fig1a, fig1b, or fig2a");
    cmd->add_option("--frames", opts->frames,
                    "Frame budget per simulation run (minimum 10000)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Offloading-factor analysis for vehicles sharing a high-altitude "
        "compute platform"};
    app.require_subcommand(1);

    CommonOptions analyze_opts;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Optimize the offloading factor for one scenario");
    add_common_options(analyze, &analyze_opts);

    CommonOptions sweep_opts;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Analyze a scenario across one parameter grid");
    add_common_options(sweep, &sweep_opts);

    CommonOptions validate_opts;
    double validate_eta = 0.5;
    CLI::App* validate = app.add_subcommand(
        "validate", "Compare analytical results against the event simulation");
    add_common_options(validate, &validate_opts);
    validate->add_option("--eta", validate_eta,
                         "Offloading factor to validate (in [0, 1])");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (analyze->parsed()) {
            const auto exp =
                resolve_experiment(analyze_opts.config_path, analyze_opts.preset);
            const auto mode = hapvec::parse_run_mode(analyze_opts.mode);
            const hapvec::ResultRow row = hapvec::run_analyze(
                exp.scenario, mode, analyze_opts.seed, analyze_opts.frames);
            write_output(analyze_opts.out_path, [&](std::ostream& out) {
                hapvec::write_result_csv(out, {row}, /*for_sweep=*/false, mode);
            });
            return row.status == "infeasible" ? 2 : 0;
        }
        if (sweep->parsed()) {
            const auto exp =
                resolve_experiment(sweep_opts.config_path, sweep_opts.preset);
            if (!exp.sweep) {
                throw hapvec::ValidationError(
                    "sweep: needs --preset or a config with a sweep section");
            }
            const auto mode = hapvec::parse_run_mode(sweep_opts.mode);
            const auto rows = hapvec::run_sweep(exp.scenario, *exp.sweep, mode,
                                                sweep_opts.seed, sweep_opts.frames);
            write_output(sweep_opts.out_path, [&](std::ostream& out) {
                hapvec::write_result_csv(out, rows, /*for_sweep=*/true, mode);
            });
            return 0;
        }
        const auto exp =
            resolve_experiment(validate_opts.config_path, validate_opts.preset);
        const auto rows = hapvec::run_validate(exp.scenario, validate_eta,
                                               validate_opts.frames,
                                               validate_opts.seed);
        write_output(validate_opts.out_path, [&](std::ostream& out) {
            hapvec::write_validation_csv(out, rows);
        });
        return 0;
    } catch (const hapvec::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hapvec::InfeasibleScenario& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hapvec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
