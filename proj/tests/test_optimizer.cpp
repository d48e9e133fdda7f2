#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hapvec/optimize.hpp"

using namespace hapvec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScenarioConfig heavy_uplink_fleet(int n) {
    ScenarioConfig cfg = default_scenario();
    cfg.gv_count = n;
    cfg.radio.uplink.payload_bits = 3e6;  // larger detection frames
    return cfg;
}

double grid_maximum(const ScenarioConfig& cfg, const FeasibleRange& range, int points) {
    double best = 0.0;
    for (int i = 0; i < points; ++i) {
        const double eta = range.eta_min + (range.eta_max - range.eta_min) *
                                               static_cast<double>(i) / (points - 1);
        double val = 0.0;
        try {
            val = rt_prob(eta, cfg, cfg.deadline());
        } catch (const NoConvergence&) {
        } catch (const SingularSystem&) {
        }
        best = std::max(best, val);
    }
    return best;
}

}  // namespace

TEST_CASE("feasible range at the reference scenario") {
    const FeasibleRange range = feasible_range(default_scenario());
    REQUIRE(range.eta_min == 0.0);
    REQUIRE_FALSE(range.lower_shrunk);
    // The platform bound binds with equality at 0.75 and is nudged inward.
    REQUIRE(range.upper_shrunk);
    REQUIRE_THAT(range.eta_max, WithinRel(0.75 - 1e-6, 1e-12));
}

TEST_CASE("feasible range bounds follow the stability formulas") {
    ScenarioConfig cfg = default_scenario();
    cfg.compute.gv_flops = 200e9;  // local service 0.3 s: must offload 2/3
    const FeasibleRange range = feasible_range(cfg);
    REQUIRE_THAT(range.eta_min, WithinRel(2.0 / 3.0, 1e-12));
    REQUIRE(cfg.gv_queue(range.eta_min).offered_load() < 1.0);
    REQUIRE(cfg.hap_queue(range.eta_max).offered_load() <
            static_cast<double>(cfg.compute.hap_servers));
}

TEST_CASE("infeasible scenario is rejected") {
    ScenarioConfig cfg = default_scenario();
    cfg.compute.gv_flops = 200e9;  // eta_min = 2/3
    cfg.gv_count = 300;            // eta_max = 0.25
    REQUIRE_THROWS_AS(feasible_range(cfg), InfeasibleScenario);
    REQUIRE_THROWS_AS(optimize(cfg), InfeasibleScenario);
}

TEST_CASE("load-balancing baseline factor") {
    const ScenarioConfig cfg = default_scenario();
    REQUIRE_THAT(baseline_factor(cfg), WithinAbs(0.36, 1e-15));

    // Equal aggregate capacities balance at one half.
    ScenarioConfig sym = cfg;
    sym.gv_count = 75;
    sym.compute.gv_flops = 600e9;
    REQUIRE_THAT(baseline_factor(sym), WithinAbs(0.5, 1e-15));

    // An overwhelming platform takes nearly everything.
    ScenarioConfig huge = cfg;
    huge.compute.hap_flops = 3e18;
    REQUIRE(baseline_factor(huge) > 0.999);

    // The baseline equalizes per-server utilization on both sides.
    for (const ScenarioConfig& c : {cfg, sym}) {
        const double eta_bl = baseline_factor(c);
        const double gv_load = c.gv_queue(eta_bl).offered_load();
        const double hap_load = c.hap_queue(eta_bl).offered_load() /
                                static_cast<double>(c.compute.hap_servers);
        REQUIRE_THAT(gv_load, WithinAbs(hap_load, 1e-12));
    }
}

TEST_CASE("optimization at the reference scenario") {
    const ScenarioConfig cfg = default_scenario();
    const OptimizationResult res = optimize(cfg);

    REQUIRE_THAT(res.eta_star, WithinAbs(0.7022113671494519, 1e-5));
    REQUIRE_THAT(res.p_rt_at_star, WithinRel(0.950036383363708, 1e-7));
    REQUIRE(res.eta_star >= res.range.eta_min);
    REQUIRE(res.eta_star <= res.range.eta_max);
    REQUIRE(res.avg_latency_at_star_s.has_value());
    REQUIRE(*res.avg_latency_at_star_s < 0.1);

    // Never worse than the range endpoints.
    REQUIRE(res.p_rt_at_star >= rt_prob(res.range.eta_min, cfg, cfg.deadline()) - 1e-9);
    REQUIRE(res.p_rt_at_star >= rt_prob(res.range.eta_max, cfg, cfg.deadline()) - 1e-9);

    REQUIRE_THAT(res.eta_baseline, WithinAbs(0.36, 1e-15));
    REQUIRE(res.baseline.p_rt.has_value());
    REQUIRE_THAT(*res.baseline.p_rt, WithinRel(0.7611431870165983, 1e-7));
    REQUIRE(res.baseline.avg_latency_s.has_value());
    REQUIRE_THAT(*res.baseline.avg_latency_s, WithinRel(0.0865682004271388, 1e-7));
    REQUIRE(res.diagnostics.grid_points == 64);
    REQUIRE(res.diagnostics.objective_evaluations >= 64);
}

TEST_CASE("optimal factor falls as the fleet grows") {
    const OptimizationResult at50 = optimize(heavy_uplink_fleet(50));
    REQUIRE(at50.eta_star == 1.0);  // small fleet: offload everything
    REQUIRE_THAT(at50.p_rt_at_star, WithinAbs(1.0, 1e-8));

    const OptimizationResult at90 = optimize(heavy_uplink_fleet(90));
    REQUIRE_THAT(at90.eta_star, WithinAbs(0.702381239820, 1e-5));
    REQUIRE_THAT(at90.p_rt_at_star, WithinRel(0.943454863, 1e-6));

    const OptimizationResult at150 = optimize(heavy_uplink_fleet(150));
    REQUIRE_THAT(at150.eta_star, WithinAbs(0.256670783991, 1e-5));

    const OptimizationResult at200 = optimize(heavy_uplink_fleet(200));
    REQUIRE_THAT(at200.eta_star, WithinAbs(0.256670777797, 1e-5));

    REQUIRE(at90.eta_star <= at50.eta_star + 1e-6);
    REQUIRE(at150.eta_star <= at90.eta_star + 1e-6);
    REQUIRE(at200.eta_star <= at150.eta_star + 1e-6);
}

TEST_CASE("optimal factor falls as on-board capacity grows") {
    double prev = 1.0;
    for (double gv_flops : {600e9, 800e9, 1000e9}) {
        ScenarioConfig cfg = heavy_uplink_fleet(90);
        cfg.compute.gv_flops = gv_flops;
        const OptimizationResult res = optimize(cfg);
        REQUIRE(res.eta_star <= prev + 1e-6);
        prev = res.eta_star;
    }
    ScenarioConfig cfg = heavy_uplink_fleet(90);
    cfg.compute.gv_flops = 1000e9;
    REQUIRE_THAT(optimize(cfg).eta_star, WithinAbs(0.683379866019, 1e-5));
}

TEST_CASE("optimization across frame rates with a stronger platform") {
    ScenarioConfig cfg = default_scenario();
    cfg.compute.hap_flops = 5000e9;

    cfg.frame_rate = 5.0;
    const OptimizationResult r5 = optimize(cfg);
    REQUIRE(r5.eta_star == 1.0);
    REQUIRE_THAT(r5.p_rt_at_star, WithinAbs(1.0, 1e-12));

    cfg.frame_rate = 10.0;
    const OptimizationResult r10 = optimize(cfg);
    REQUIRE(r10.eta_star == 1.0);

    cfg.frame_rate = 15.0;
    const OptimizationResult r15 = optimize(cfg);
    REQUIRE_THAT(r15.eta_star, WithinAbs(0.786950382676, 1e-5));
    REQUIRE_THAT(r15.p_rt_at_star, WithinRel(0.776508071885, 1e-6));

    cfg.frame_rate = 20.0;
    const OptimizationResult r20 = optimize(cfg);
    REQUIRE_THAT(r20.eta_star, WithinAbs(0.563573656259, 1e-5));
    REQUIRE_THAT(r20.p_rt_at_star, WithinRel(0.547269840918, 1e-6));

    REQUIRE(r10.p_rt_at_star <= r5.p_rt_at_star + 1e-9);
    REQUIRE(r15.p_rt_at_star <= r10.p_rt_at_star + 1e-9);
    REQUIRE(r20.p_rt_at_star <= r15.p_rt_at_star + 1e-9);
}

TEST_CASE("point evaluation reports instability as data") {
    const ScenarioConfig cfg = default_scenario();

    const PointEvaluation balanced = evaluate_at(cfg, 0.36);
    REQUIRE(balanced.gv_applicable);
    REQUIRE(balanced.hap_applicable);
    REQUIRE(balanced.gv_stable);
    REQUIRE(balanced.hap_stable);
    REQUIRE(balanced.p_rt.has_value());
    REQUIRE_THAT(*balanced.p_rt, WithinRel(0.7611431870165983, 1e-7));

    const PointEvaluation critical = evaluate_at(cfg, 0.75);
    REQUIRE(critical.hap_applicable);
    REQUIRE_FALSE(critical.hap_stable);
    REQUIRE(critical.gv_stable);
    REQUIRE_FALSE(critical.p_rt.has_value());
    REQUIRE_FALSE(critical.avg_latency_s.has_value());

    const PointEvaluation local_only = evaluate_at(cfg, 0.0);
    REQUIRE_FALSE(local_only.hap_applicable);
    REQUIRE(local_only.p_rt.has_value());
    REQUIRE_THAT(*local_only.p_rt, WithinRel(0.3430833347177247, 1e-9));

    const PointEvaluation hap_only = evaluate_at(cfg, 1.0);
    REQUIRE_FALSE(hap_only.gv_applicable);
    REQUIRE_FALSE(hap_only.hap_stable);
    REQUIRE_FALSE(hap_only.p_rt.has_value());
}

TEST_CASE("optimizer never loses to a dense grid") {
    const ScenarioConfig cfg = default_scenario();
    const OptimizationResult res = optimize(cfg);
    REQUIRE(res.p_rt_at_star >= grid_maximum(cfg, res.range, 1001) - 1e-9);
}

TEST_CASE("optimizer handles an unreachable platform") {
    // Radio delays beyond the deadline zero out the offloaded term; the
    // optimizer must still track the dense grid on the local-only objective.
    ScenarioConfig cfg = default_scenario();
    cfg.radio.uplink.payload_bits = 1e7;
    REQUIRE_FALSE(deadline_budget_hap(cfg, cfg.deadline(), 1.0).feasible);

    const OptimizationResult res = optimize(cfg);
    REQUIRE(res.p_rt_at_star > 0.0);  // the local term still hits sometimes
    REQUIRE(res.p_rt_at_star >= grid_maximum(cfg, res.range, 1001) - 1e-9);
}
