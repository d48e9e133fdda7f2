#pragma once

// Experiment plumbing shared by the command-line tool and the tests:
// analyze one scenario, sweep one parameter over a grid, or validate the
// analytical model against the event simulation — each emitting CSV whose
// column set depends only on (command, mode).  Cells that have no defensible
// number carry an explicit marker ("unstable", "infeasible", "n/a") instead.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hapvec/config_io.hpp"
#include "hapvec/errors.hpp"
#include "hapvec/latency.hpp"
#include "hapvec/optimize.hpp"
#include "hapvec/queueing.hpp"
#include "hapvec/scenario.hpp"
#include "hapvec/sim.hpp"

namespace hapvec {

enum class RunMode { kAnalytical, kSimulate, kBoth };

inline bool mode_has_analytical(RunMode m) { return m != RunMode::kSimulate; }
inline bool mode_has_simulation(RunMode m) { return m != RunMode::kAnalytical; }

inline RunMode parse_run_mode(const std::string& name) {
    if (name == "analytical") return RunMode::kAnalytical;
    if (name == "simulate") return RunMode::kSimulate;
    if (name == "both") return RunMode::kBoth;
    throw ValidationError("mode: expected analytical, simulate, or both, got \"" +
                          name + "\"");
}

// One CSV cell: a number, or a marker explaining its absence.
struct Cell {
    std::optional<double> value;
    std::string marker = "n/a";
};

inline Cell make_cell(double v) { return Cell{v, ""}; }
inline Cell marker_cell(std::string m) { return Cell{std::nullopt, std::move(m)}; }

// A sweep over one scalar scenario parameter.
struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> kNames = {
        "gv_count",  "frame_rate_fps", "gv_flops",
        "hap_flops_per_server", "uplink_bits", "deadline_s"};
    return kNames;
}

inline void validate(const SweepSpec& sweep) {
    bool known = false;
    for (const auto& name : sweep_parameters()) {
        known = known || name == sweep.parameter;
    }
    if (!known) {
        std::string allowed;
        for (const auto& name : sweep_parameters()) {
            allowed += allowed.empty() ? name : ", " + name;
        }
        throw ValidationError("sweep.parameter: unknown parameter \"" +
                              sweep.parameter + "\" (expected one of " + allowed + ")");
    }
    if (sweep.values.empty()) {
        throw ValidationError("sweep.values: must not be empty");
    }
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
        if (!std::isfinite(sweep.values[i])) {
            throw ValidationError("sweep.values: must be finite");
        }
        if (i > 0 && sweep.values[i] <= sweep.values[i - 1]) {
            throw ValidationError("sweep.values: must be strictly increasing");
        }
        if (sweep.parameter == "gv_count" &&
            sweep.values[i] != std::floor(sweep.values[i])) {
            throw ValidationError("sweep.values: gv_count values must be integers");
        }
    }
}

inline ScenarioConfig apply_parameter(ScenarioConfig cfg, const std::string& name,
                                      double value) {
    if (name == "gv_count") {
        cfg.gv_count = static_cast<int>(value);
    } else if (name == "frame_rate_fps") {
        cfg.frame_rate = value;
    } else if (name == "gv_flops") {
        cfg.compute.gv_flops = value;
    } else if (name == "hap_flops_per_server") {
        cfg.compute.hap_flops = value;
    } else if (name == "uplink_bits") {
        cfg.radio.uplink.payload_bits = value;
    } else if (name == "deadline_s") {
        cfg.deadline_override_s = value;
    } else {
        throw ValidationError("sweep.parameter: unknown parameter \"" + name + "\"");
    }
    validate(cfg);
    return cfg;
}

// One analyzed scenario: optimized point, baseline split, and the
// fully-local reference, plus simulation readings at the optimum.
struct ResultRow {
    std::string parameter;                       // sweeps only
    std::optional<double> parameter_value;       // sweeps only
    std::string status = "ok";                   // ok | infeasible
    Cell eta_min, eta_max, eta_star, eta_baseline;
    Cell p_rt_star, latency_star_s;
    Cell p_rt_baseline, latency_baseline_s;
    Cell p_rt_local, latency_local_s;
    std::optional<std::uint64_t> sim_seed, sim_frames;
    Cell sim_p_rt_star, sim_p_rt_star_se;
    Cell sim_latency_star_s, sim_latency_star_se_s;
};

namespace detail {

inline Cell point_cell(const PointEvaluation& point, const std::optional<double>& v) {
    if (v) return make_cell(*v);
    if ((point.gv_applicable && !point.gv_stable) ||
        (point.hap_applicable && !point.hap_stable)) {
        return marker_cell("unstable");
    }
    return marker_cell("n/a");
}

}  // namespace detail

inline ResultRow run_analyze(const ScenarioConfig& cfg, RunMode mode,
                             std::uint64_t seed, std::uint64_t frames = 1000000,
                             std::uint64_t row_index = 0) {
    validate(cfg);
    ResultRow row;

    std::optional<double> eta_star;
    try {
        const OptimizationResult res = optimize(cfg);
        eta_star = res.eta_star;
        row.eta_min = make_cell(res.range.eta_min);
        row.eta_max = make_cell(res.range.eta_max);
        row.eta_star = make_cell(res.eta_star);
        row.eta_baseline = make_cell(res.eta_baseline);
        row.p_rt_star = make_cell(res.p_rt_at_star);
        row.latency_star_s = res.avg_latency_at_star_s
                                 ? make_cell(*res.avg_latency_at_star_s)
                                 : marker_cell("n/a");
        row.p_rt_baseline = detail::point_cell(res.baseline, res.baseline.p_rt);
        row.latency_baseline_s =
            detail::point_cell(res.baseline, res.baseline.avg_latency_s);
    } catch (const InfeasibleScenario&) {
        row.status = "infeasible";
        row.eta_min = marker_cell("infeasible");
        row.eta_max = marker_cell("infeasible");
        row.eta_star = marker_cell("infeasible");
        row.eta_baseline = make_cell(baseline_factor(cfg));
        const PointEvaluation baseline = evaluate_at(cfg, baseline_factor(cfg));
        row.p_rt_baseline = detail::point_cell(baseline, baseline.p_rt);
        row.latency_baseline_s = detail::point_cell(baseline, baseline.avg_latency_s);
    }

    const PointEvaluation local = evaluate_at(cfg, 0.0);
    row.p_rt_local = detail::point_cell(local, local.p_rt);
    row.latency_local_s = detail::point_cell(local, local.avg_latency_s);

    if (mode_has_simulation(mode) && eta_star) {
        SimConfig sim;
        sim.scenario = cfg;
        sim.eta = *eta_star;
        sim.frame_budget = frames;
        sim.seed = seed + row_index;
        row.sim_seed = sim.seed;
        row.sim_frames = frames;
        try {
            const SimStats stats = simulate_system(sim);
            row.sim_p_rt_star = make_cell(stats.deadline_fraction.mean);
            row.sim_p_rt_star_se = make_cell(stats.deadline_fraction.std_error);
            row.sim_latency_star_s = make_cell(stats.latency.mean);
            row.sim_latency_star_se_s = make_cell(stats.latency.std_error);
        } catch (const Error&) {
            row.sim_p_rt_star = marker_cell("n/a");
            row.sim_p_rt_star_se = marker_cell("n/a");
            row.sim_latency_star_s = marker_cell("n/a");
            row.sim_latency_star_se_s = marker_cell("n/a");
        }
    }
    return row;
}

inline std::vector<ResultRow> run_sweep(const ScenarioConfig& cfg,
                                        const SweepSpec& sweep, RunMode mode,
                                        std::uint64_t seed,
                                        std::uint64_t frames = 1000000) {
    validate(sweep);
    std::vector<ResultRow> rows;
    rows.reserve(sweep.values.size());
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
        const ScenarioConfig point = apply_parameter(cfg, sweep.parameter,
                                                     sweep.values[i]);
        ResultRow row = run_analyze(point, mode, seed, frames, i);
        row.parameter = sweep.parameter;
        row.parameter_value = sweep.values[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV rendering.  Numbers print with twelve significant digits and a '.'
// decimal separator; fields never need RFC-4180 quoting but get it anyway if
// a marker ever contains a delimiter.

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string quoted = "\"";
    for (char ch : field) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

inline std::string csv_field(const Cell& cell) {
    return cell.value ? format_number(*cell.value) : csv_escape(cell.marker);
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << fields[i];
    }
    out << '\n';
}

}  // namespace detail

inline std::vector<std::string> result_columns(bool for_sweep, RunMode mode) {
    std::vector<std::string> cols;
    if (for_sweep) {
        cols.push_back("parameter");
        cols.push_back("value");
    }
    cols.insert(cols.end(), {"status", "eta_min", "eta_max", "eta_star",
                             "eta_baseline"});
    if (mode_has_analytical(mode)) {
        cols.insert(cols.end(),
                    {"p_rt_star", "latency_star_s", "p_rt_baseline",
                     "latency_baseline_s", "p_rt_local", "latency_local_s"});
    }
    if (mode_has_simulation(mode)) {
        cols.insert(cols.end(),
                    {"sim_seed", "sim_frames", "sim_p_rt_star", "sim_p_rt_star_se",
                     "sim_latency_star_s", "sim_latency_star_se_s"});
    }
    return cols;
}

inline void write_result_csv(std::ostream& out, const std::vector<ResultRow>& rows,
                             bool for_sweep, RunMode mode) {
    detail::csv_row(out, result_columns(for_sweep, mode));
    for (const ResultRow& row : rows) {
        std::vector<std::string> fields;
        if (for_sweep) {
            fields.push_back(detail::csv_escape(row.parameter));
            fields.push_back(row.parameter_value
                                 ? detail::format_number(*row.parameter_value)
                                 : "n/a");
        }
        fields.push_back(row.status);
        fields.push_back(detail::csv_field(row.eta_min));
        fields.push_back(detail::csv_field(row.eta_max));
        fields.push_back(detail::csv_field(row.eta_star));
        fields.push_back(detail::csv_field(row.eta_baseline));
        if (mode_has_analytical(mode)) {
            fields.push_back(detail::csv_field(row.p_rt_star));
            fields.push_back(detail::csv_field(row.latency_star_s));
            fields.push_back(detail::csv_field(row.p_rt_baseline));
            fields.push_back(detail::csv_field(row.latency_baseline_s));
            fields.push_back(detail::csv_field(row.p_rt_local));
            fields.push_back(detail::csv_field(row.latency_local_s));
        }
        if (mode_has_simulation(mode)) {
            fields.push_back(row.sim_seed ? std::to_string(*row.sim_seed) : "n/a");
            fields.push_back(row.sim_frames ? std::to_string(*row.sim_frames)
                                            : "n/a");
            fields.push_back(detail::csv_field(row.sim_p_rt_star));
            fields.push_back(detail::csv_field(row.sim_p_rt_star_se));
            fields.push_back(detail::csv_field(row.sim_latency_star_s));
            fields.push_back(detail::csv_field(row.sim_latency_star_se_s));
        }
        detail::csv_row(out, fields);
    }
}

// ---------------------------------------------------------------------------
// Validation report: analytical model vs the event simulation, side by side.

struct ValidationRow {
    std::string quantity;
    Cell analytical;
    Cell simulated;
    std::optional<double> abs_diff;
    std::optional<double> tolerance;
    std::string status;  // pass | fail | n/a
};

// Tolerances for the validation report.  The deadline probability carries
// the vehicle-side term's documented positive bias (the analytical
// expression assumes the in-service frame started exactly at the arrival),
// so its band is 0.03 whenever local frames exist and 0.01 otherwise; means
// use 2% relative with a statistical floor of four standard errors.
inline double validation_tolerance_p_rt(double eta) { return eta < 1.0 ? 0.03 : 0.01; }

inline double validation_tolerance_mean(double analytical, double std_error) {
    return std::max(0.02 * std::abs(analytical), 4.0 * std_error + 1e-6);
}

inline std::vector<ValidationRow> run_validate(const ScenarioConfig& cfg, double eta,
                                               std::uint64_t frames,
                                               std::uint64_t seed) {
    validate(cfg);
    SimConfig sim;
    sim.scenario = cfg;
    sim.eta = eta;
    sim.frame_budget = frames;
    sim.seed = seed;
    const SimStats stats = simulate_system(sim);  // rejects unstable settings

    std::vector<ValidationRow> rows;
    const auto push = [&rows](const std::string& quantity, double analytical,
                              double simulated, double tolerance) {
        ValidationRow row;
        row.quantity = quantity;
        row.analytical = make_cell(analytical);
        row.simulated = make_cell(simulated);
        row.abs_diff = std::abs(analytical - simulated);
        row.tolerance = tolerance;
        row.status = *row.abs_diff <= tolerance ? "pass" : "fail";
        rows.push_back(std::move(row));
    };
    const auto push_na = [&rows](const std::string& quantity) {
        ValidationRow row;
        row.quantity = quantity;
        row.analytical = marker_cell("n/a");
        row.simulated = marker_cell("n/a");
        row.status = "n/a";
        rows.push_back(std::move(row));
    };

    const double t_max = cfg.deadline();
    push("p_rt", rt_prob(eta, cfg, t_max), stats.deadline_fraction.mean,
         validation_tolerance_p_rt(eta));

    if (eta < 1.0) {
        const double analytic_wait =
            mean_waiting_time(solve_queue(cfg.gv_queue(eta)));
        push("wait_gv_s", analytic_wait, stats.wait_gv.mean,
             validation_tolerance_mean(analytic_wait, stats.wait_gv.std_error));
    } else {
        push_na("wait_gv_s");
    }

    if (eta > 0.0) {
        const double analytic_wait =
            mean_waiting_time(solve_queue(cfg.hap_queue(eta)));
        push("wait_hap_s", analytic_wait, stats.wait_hap.mean,
             validation_tolerance_mean(analytic_wait, stats.wait_hap.std_error));
    } else {
        push_na("wait_hap_s");
    }

    const double analytic_latency = avg_latency(eta, cfg);
    push("latency_s", analytic_latency, stats.latency.mean,
         validation_tolerance_mean(analytic_latency, stats.latency.std_error));
    return rows;
}

inline std::vector<std::string> validation_columns() {
    return {"quantity", "analytical", "simulated", "abs_diff", "tolerance",
            "status"};
}

inline void write_validation_csv(std::ostream& out,
                                 const std::vector<ValidationRow>& rows) {
    detail::csv_row(out, validation_columns());
    for (const ValidationRow& row : rows) {
        detail::csv_row(
            out,
            {detail::csv_escape(row.quantity), detail::csv_field(row.analytical),
             detail::csv_field(row.simulated),
             row.abs_diff ? detail::format_number(*row.abs_diff) : "n/a",
             row.tolerance ? detail::format_number(*row.tolerance) : "n/a",
             row.status});
    }
}

// ---------------------------------------------------------------------------
// Bundled experiments reproducing the reference study's figures.

struct Experiment {
    ScenarioConfig scenario;
    std::optional<SweepSpec> sweep;
};

// Named presets; the same definitions are checked into configs/ as JSON.
inline Experiment preset_experiment(const std::string& name) {
    Experiment exp;
    exp.scenario = default_scenario();
    if (name == "default") {
        return exp;
    }
    if (name == "fig1a") {
        exp.scenario.radio.uplink.payload_bits = 3e6;
        exp.sweep = SweepSpec{"gv_count", {50, 90, 150, 200}};
        return exp;
    }
    if (name == "fig1b") {
        exp.scenario.gv_count = 90;
        exp.scenario.radio.uplink.payload_bits = 3e6;
        exp.sweep = SweepSpec{"gv_flops", {200e9, 600e9, 800e9, 1000e9}};
        return exp;
    }
    if (name == "fig2a") {
        exp.scenario.compute.hap_flops = 5000e9;
        exp.sweep = SweepSpec{"frame_rate_fps", {5, 10, 15, 20}};
        return exp;
    }
    throw ValidationError(
        "preset: unknown preset \"" + name +
        "\" (expected default, fig1a, fig1b, or fig2a)");
}

inline Experiment parse_experiment(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) {
        throw ValidationError("config: expected an object");
    }

    Experiment exp;
    if (const auto it = root.find("sweep"); it != root.end()) {
        const nlohmann::json& node = *it;
        if (!node.is_object()) {
            throw ValidationError("sweep: expected an object");
        }
        SweepSpec sweep;
        for (const auto& [key, value] : node.items()) {
            if (key == "parameter") {
                if (!value.is_string()) {
                    throw ValidationError("sweep.parameter: expected a string");
                }
                sweep.parameter = value.get<std::string>();
            } else if (key == "values") {
                if (!value.is_array()) {
                    throw ValidationError("sweep.values: expected an array");
                }
                for (const auto& entry : value) {
                    if (!entry.is_number()) {
                        throw ValidationError("sweep.values: expected numbers");
                    }
                    sweep.values.push_back(entry.get<double>());
                }
            } else {
                throw ValidationError("sweep." + key + ": unknown key");
            }
        }
        validate(sweep);
        exp.sweep = std::move(sweep);
        root.erase("sweep");
    }
    exp.scenario = parse_config(root.dump());
    return exp;
}

inline Experiment load_experiment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("config: cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw IoError("config: failed reading " + path);
    }
    return parse_experiment(buffer.str());
}

inline std::string write_experiment(const Experiment& exp) {
    nlohmann::json root = nlohmann::json::parse(write_config(exp.scenario));
    if (exp.sweep) {
        root["sweep"]["parameter"] = exp.sweep->parameter;
        root["sweep"]["values"] = exp.sweep->values;
    }
    return root.dump(2) + "\n";
}

}  // namespace hapvec
