#pragma once

// End-to-end delay models for the two processing paths and the probability
// that a frame meets its deadline.  A frame processed on board waits only in
// the vehicle's own single-server queue; an offloaded frame pays the radio
// round trip and waits in the platform's multi-server queue.  Deadline-hit
// probabilities come from the stationary state distribution: the remaining
// time budget is expressed in whole service windows plus a fractional one,
// and the fraction is credited to frames already in service.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hapvec/errors.hpp"
#include "hapvec/link_budget.hpp"
#include "hapvec/queueing.hpp"
#include "hapvec/scenario.hpp"

namespace hapvec {

// Radio legs of one offloaded frame.
struct CommDelays {
    double uplink_s = 0.0;
    double downlink_s = 0.0;
    double round_trip_prop_s = 0.0;  // both propagation legs together

    double total() const { return uplink_s + downlink_s + round_trip_prop_s; }
};

// Additive pieces of one path's mean latency; unused pieces stay zero.
struct DelayBreakdown {
    double wait = 0.0;
    double service = 0.0;
    double t_ul = 0.0;
    double t_dl = 0.0;
    double round_trip_prop = 0.0;
    double total = 0.0;
};

// Deadline budget in units of one service window: f_max whole windows plus a
// fraction delta of the next.  An infeasible budget (deadline spent before
// any service could complete) carries zeroed fields.
struct DeadlineBudget {
    long long f_max = 0;
    double delta = 0.0;
    bool feasible = false;
};

namespace detail {

inline void check_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ValidationError("eta: must lie in [0, 1]");
    }
}

inline void check_deadline(double t_max) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw ValidationError("t_max: must be finite and > 0");
    }
}

}  // namespace detail

// Mean radio delays for one offloaded frame at offloading factor eta.  Under
// the all-vehicles sharing policy every vehicle holds a 1/n slice of the
// band; under the offloading-only policy the expected eta*n offloaders (at
// least one) share it.
inline CommDelays comm_delays(const ScenarioConfig& cfg, double eta) {
    validate(cfg);
    detail::check_eta(eta);
    const double d = median_slant_distance(cfg.geometry);
    const double share =
        cfg.radio.sharing == BandwidthSharing::kAllVehicles
            ? static_cast<double>(cfg.gv_count)
            : std::max(1.0, eta * static_cast<double>(cfg.gv_count));
    const double b_alloc = cfg.radio.bandwidth_hz / share;

    CommDelays delays;
    const double snr_ul = snr_linear(cfg.uplink_budget(), d);
    delays.uplink_s =
        transmission_time(cfg.radio.uplink.payload_bits, capacity_bps(snr_ul, b_alloc));
    const double snr_dl = snr_linear(cfg.downlink_budget(), d);
    delays.downlink_s =
        transmission_time(cfg.radio.downlink.payload_bits, capacity_bps(snr_dl, b_alloc));
    delays.round_trip_prop_s = 2.0 * propagation_delay(d);
    return delays;
}

// Mean latency of a locally processed frame: queueing wait plus one service.
inline DelayBreakdown gv_delay(double eta, const ScenarioConfig& cfg) {
    validate(cfg);
    detail::check_eta(eta);
    const QueueSpec q = cfg.gv_queue(eta);
    DelayBreakdown d;
    d.service = q.service_time;
    if (q.arrival_rate > 0.0) {
        d.wait = mean_waiting_time(solve_queue(q));
    }
    d.total = d.wait + d.service;
    return d;
}

// Mean latency of an offloaded frame: both radio legs, both propagation
// hops, platform queueing wait, and one platform service.
inline DelayBreakdown hap_delay(double eta, const ScenarioConfig& cfg) {
    validate(cfg);
    detail::check_eta(eta);
    const QueueSpec q = cfg.hap_queue(eta);
    const CommDelays comm = comm_delays(cfg, eta);
    DelayBreakdown d;
    d.service = q.service_time;
    d.t_ul = comm.uplink_s;
    d.t_dl = comm.downlink_s;
    d.round_trip_prop = comm.round_trip_prop_s;
    if (q.arrival_rate > 0.0) {
        d.wait = mean_waiting_time(solve_queue(q));
    }
    d.total = d.wait + d.service + d.t_ul + d.t_dl + d.round_trip_prop;
    return d;
}

// Raw budget arithmetic shared by both paths: how many whole service windows
// (and what fraction of the next) fit between the fixed delays and the
// deadline.  A negative window count means the fixed delays alone overrun.
inline DeadlineBudget budget_from_windows(double t_max, double fixed_delay_s,
                                          double service_s, int servers) {
    const double x = (t_max - fixed_delay_s) / service_s;
    DeadlineBudget b;
    if (x < 0.0) {
        return b;  // infeasible: all fields zero
    }
    const double whole = std::floor(x);
    b.f_max = static_cast<long long>(whole) * servers;
    b.delta = x - whole;
    b.feasible = true;
    return b;
}

// Deadline budget for the offloaded path at offloading factor eta (the
// sharing policy can make radio delays eta-dependent).
inline DeadlineBudget deadline_budget_hap(const ScenarioConfig& cfg, double t_max,
                                          double eta = 1.0) {
    validate(cfg);
    detail::check_deadline(t_max);
    const CommDelays comm = comm_delays(cfg, eta);
    return budget_from_windows(t_max, comm.total(), cfg.compute.hap_service_time(),
                               cfg.compute.hap_servers);
}

// Deadline budget for the local path.  A budget below one whole window is
// infeasible: the arriving frame itself still needs a full service.
inline DeadlineBudget deadline_budget_gv(const ScenarioConfig& cfg, double t_max) {
    validate(cfg);
    detail::check_deadline(t_max);
    DeadlineBudget b = budget_from_windows(t_max, 0.0, cfg.compute.gv_service_time(), 1);
    if (b.f_max < 1) {
        return DeadlineBudget{};  // the frame's own service cannot fit
    }
    return b;
}

// Binomial point masses for k successes in `trials` draws at probability p,
// computed in log space so extreme p stays finite.
inline std::vector<double> binomial_pmf(int trials, double p) {
    if (trials < 0 || !(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("binomial pmf: need trials >= 0 and p in [0, 1]");
    }
    std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
    if (p == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p == 1.0) {
        pmf[static_cast<std::size_t>(trials)] = 1.0;
        return pmf;
    }
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double log_fact_n = std::lgamma(static_cast<double>(trials) + 1.0);
    for (int k = 0; k <= trials; ++k) {
        const double log_choose = log_fact_n - std::lgamma(static_cast<double>(k) + 1.0) -
                                  std::lgamma(static_cast<double>(trials - k) + 1.0);
        pmf[static_cast<std::size_t>(k)] = std::exp(log_choose + k * log_p +
                                                    (trials - k) * log_q);
    }
    return pmf;
}

// Probability an offloaded frame meets its deadline: it must find fewer than
// f_max frames in the platform system, or find f_max + j with j < k while k
// of the c in-service frames clear within the fractional window.
inline double rt_prob_hap(const StateDistribution& dist, const DeadlineBudget& budget,
                          int servers) {
    if (!budget.feasible) {
        return 0.0;
    }
    double prob = cumulative_probability(dist, budget.f_max - 1);
    if (budget.delta > 0.0) {
        const std::vector<double> pmf = binomial_pmf(servers, budget.delta);
        double occupancy_prefix = 0.0;  // sum of p_{f_max + j} for j < k
        for (int k = 1; k <= servers; ++k) {
            occupancy_prefix += state_probability(dist, budget.f_max + k - 1);
            prob += pmf[static_cast<std::size_t>(k)] * occupancy_prefix;
        }
    }
    return std::clamp(prob, 0.0, 1.0);
}

// Probability a locally processed frame meets its deadline: fewer than f_max
// ahead of it, or exactly f_max with the in-service one inside the fraction.
inline double rt_prob_gv(const StateDistribution& dist, const DeadlineBudget& budget) {
    if (!budget.feasible) {
        return 0.0;
    }
    const double prob = cumulative_probability(dist, budget.f_max - 1) +
                        budget.delta * state_probability(dist, budget.f_max);
    return std::clamp(prob, 0.0, 1.0);
}

// Fleet-wide probability of real-time service: the offloading factor blends
// the two paths' deadline-hit probabilities.  At the endpoints the unused
// path has no queue and is skipped outright.
inline double rt_prob(double eta, const ScenarioConfig& cfg, double t_max) {
    validate(cfg);
    detail::check_eta(eta);
    detail::check_deadline(t_max);
    double p_gv = 0.0;
    if (eta < 1.0) {
        const StateDistribution dist = solve_queue(cfg.gv_queue(eta));
        p_gv = rt_prob_gv(dist, deadline_budget_gv(cfg, t_max));
        if (eta == 0.0) {
            return p_gv;
        }
    }
    const StateDistribution dist = solve_queue(cfg.hap_queue(eta));
    const double p_hap =
        rt_prob_hap(dist, deadline_budget_hap(cfg, t_max, eta), cfg.compute.hap_servers);
    if (eta == 1.0) {
        return p_hap;
    }
    return eta * p_hap + (1.0 - eta) * p_gv;
}

// Fleet-wide mean latency: the same blend over the two paths' totals.
inline double avg_latency(double eta, const ScenarioConfig& cfg) {
    validate(cfg);
    detail::check_eta(eta);
    if (eta == 0.0) {
        return gv_delay(0.0, cfg).total;
    }
    if (eta == 1.0) {
        return hap_delay(1.0, cfg).total;
    }
    return eta * hap_delay(eta, cfg).total + (1.0 - eta) * gv_delay(eta, cfg).total;
}

}  // namespace hapvec
