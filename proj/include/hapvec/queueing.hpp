#pragma once

// Steady-state analysis of M/D/c queues with Poisson arrivals and a fixed
// service time shared by c identical servers.
//
// Observed at instants one service time D apart, the frame count forms an
// embedded Markov chain: every frame in service at time t has completed by
// t + D, while waiting frames remain and a Poisson(lambda * D) batch arrives.
// The stationary balance equations of that chain, closed with the geometric
// tail p_j = p_M * tau^-(j - M) that the chain provably settles into, reduce
// to a finite (M+1) x (M+1) linear system.  Because departures are equally
// likely at every point of a service interval only in the deterministic
// sense used here, the embedded distribution coincides with the
// time-stationary one, so all quantities below are continuous-time values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapvec/errors.hpp"

namespace hapvec {

struct QueueSpec {
    double arrival_rate = 0.0;  // frames per second entering the queue
    double service_time = 0.0;  // seconds one server spends per frame
    int servers = 1;

    // Mean number of service times' worth of work arriving per service time.
    double offered_load() const { return arrival_rate * service_time; }

    // A steady state exists iff the offered load is below the server count.
    bool stable() const { return offered_load() < static_cast<double>(servers); }
};

inline void validate(const QueueSpec& spec) {
    if (!(spec.arrival_rate >= 0.0) || !std::isfinite(spec.arrival_rate)) {
        throw ValidationError("queue spec: arrival_rate must be finite and >= 0");
    }
    if (!(spec.service_time > 0.0) || !std::isfinite(spec.service_time)) {
        throw ValidationError("queue spec: service_time must be finite and > 0");
    }
    if (spec.servers < 1) {
        throw ValidationError("queue spec: servers must be >= 1");
    }
}

// Stationary distribution of the frame count, truncated at level M with a
// geometric tail beyond it: p_j = probs[min(j, M)] * decay_root^-(max(j - M, 0)).
struct StateDistribution {
    QueueSpec spec;
    double decay_root = std::numeric_limits<double>::infinity();
    int truncation = 0;          // level M; probs has M + 1 entries
    std::vector<double> probs;   // p_0 .. p_M
};

namespace detail {

// Poisson(mean) probabilities for counts 0 .. count-1, computed in log space
// so large means and far tails stay finite.
inline std::vector<double> poisson_pmf(double mean, int count) {
    std::vector<double> pmf(static_cast<std::size_t>(count), 0.0);
    if (mean <= 0.0) {
        if (count > 0) pmf[0] = 1.0;
        return pmf;
    }
    const double log_mean = std::log(mean);
    for (int i = 0; i < count; ++i) {
        pmf[static_cast<std::size_t>(i)] =
            std::exp(-mean + i * log_mean - std::lgamma(static_cast<double>(i) + 1.0));
    }
    return pmf;
}

}  // namespace detail

// Unique root tau > 1 of z^c = exp(G (z - 1)) with G the offered load, i.e.
// the geometric decay rate of the stationary tail.  Solved in log form
// f(z) = c ln z - G (z - 1), which is positive just above 1 and falls to
// -inf, by bracketed bisection.  The root grows without bound as G -> 0 and
// approaches 1 as G -> c.
inline double compute_decay_root(const QueueSpec& spec) {
    validate(spec);
    if (spec.arrival_rate <= 0.0) {
        throw ZeroArrivalRate("decay root: arrival rate must be positive");
    }
    if (!spec.stable()) {
        throw UnstableQueue("decay root: offered load " + std::to_string(spec.offered_load()) +
                            " >= servers " + std::to_string(spec.servers));
    }
    const double g = spec.offered_load();
    const double c = static_cast<double>(spec.servers);
    const auto f = [&](double z) { return c * std::log(z) - g * (z - 1.0); };

    double lo = 1.0;
    double hi = 2.0;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e60) {
            throw NoConvergence("decay root: bracket exceeded 1e60");
        }
    }
    for (int it = 0; it < 400 && (hi - lo) > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double tau = 0.5 * (lo + hi);
    if (std::abs(f(tau)) > 1e-12) {
        throw NoConvergence("decay root: residual above tolerance");
    }
    return tau;
}

// Solves the truncated balance system at a caller-chosen level M.  Row j < M
// states that reaching j frames requires either at most c frames previously
// (all of which depart within one service time) plus j fresh arrivals, or
// k > c frames of which k - c remain plus the balance as arrivals; columns
// beyond M are folded into column M with geometric weights.  The last row
// normalises the distribution including its closed-form tail mass.
inline StateDistribution solve_state_distribution(const QueueSpec& spec, int truncation) {
    validate(spec);
    if (spec.arrival_rate <= 0.0) {
        throw ZeroArrivalRate("state distribution: arrival rate must be positive");
    }
    if (!spec.stable()) {
        throw UnstableQueue("state distribution: offered load " +
                            std::to_string(spec.offered_load()) + " >= servers " +
                            std::to_string(spec.servers));
    }
    const int c = spec.servers;
    const int m = truncation;
    if (m < c + 1) {
        throw ValidationError("state distribution: truncation must exceed server count");
    }

    const double tau = compute_decay_root(spec);
    const double inv_tau = 1.0 / tau;
    const double tail_sum = tau / (tau - 1.0);  // sum of tau^-i for i >= 0
    const std::vector<double> a = detail::poisson_pmf(spec.offered_load(), m);

    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    for (int j = 0; j < m; ++j) {
        mat(j, j) += 1.0;
        const double aj = a[static_cast<std::size_t>(j)];
        for (int k = 0; k <= c; ++k) {
            mat(j, k) -= aj;
        }
        for (int k = c + 1; k <= c + j; ++k) {
            const double w = a[static_cast<std::size_t>(j + c - k)];
            if (k <= m) {
                mat(j, k) -= w;
            } else {
                mat(j, m) -= w * std::pow(inv_tau, k - m);
            }
        }
    }
    for (int k = 0; k < m; ++k) {
        mat(m, k) = 1.0;
    }
    mat(m, m) = tail_sum;
    rhs(m) = 1.0;

    const Eigen::VectorXd x = mat.partialPivLu().solve(rhs);
    const double residual = (mat * x - rhs).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(residual) || residual > 1e-8) {
        throw SingularSystem("state distribution: solver residual " + std::to_string(residual));
    }

    StateDistribution dist;
    dist.spec = spec;
    dist.decay_root = tau;
    dist.truncation = m;
    dist.probs.resize(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
        double p = x(j);
        if (p < 0.0) {
            if (p < -1e-12) {
                throw SingularSystem("state distribution: probability " + std::to_string(j) +
                                     " is " + std::to_string(p));
            }
            p = 0.0;  // round-off from the elimination at very light load
        }
        dist.probs[static_cast<std::size_t>(j)] = p;
    }
    return dist;
}

// Stationary probability of exactly j frames in the system.
inline double state_probability(const StateDistribution& dist, long long j) {
    if (j < 0) return 0.0;
    const long long m = dist.truncation;
    if (j <= m) return dist.probs[static_cast<std::size_t>(j)];
    return dist.probs[static_cast<std::size_t>(m)] *
           std::pow(1.0 / dist.decay_root, static_cast<double>(j - m));
}

// Stationary probability of at most j frames in the system; the geometric
// tail lets the partial sum beyond the truncation close in one expression.
inline double cumulative_probability(const StateDistribution& dist, long long j) {
    if (j < 0) return 0.0;
    const long long m = dist.truncation;
    double sum = 0.0;
    const long long head_end = std::min(j, m - 1);
    for (long long i = 0; i <= head_end; ++i) {
        sum += dist.probs[static_cast<std::size_t>(i)];
    }
    if (j >= m) {
        const double q = 1.0 / dist.decay_root;
        const double terms = static_cast<double>(j - m + 1);
        const double partial = (q == 0.0) ? 1.0 : (1.0 - std::pow(q, terms)) / (1.0 - q);
        sum += dist.probs[static_cast<std::size_t>(m)] * partial;
    }
    return std::clamp(sum, 0.0, 1.0);  // guards accumulated round-off only
}

// Mean number of frames waiting (excluding those in service).  The head sums
// directly; the geometric tail contributes p_M * s * (M - c + s - 1) with
// s = tau / (tau - 1), obtained by summing (j - c) tau^-(j-M) in closed form.
inline double mean_queue_length(const StateDistribution& dist) {
    const int c = dist.spec.servers;
    const int m = dist.truncation;
    double sum = 0.0;
    for (int k = c; k < m; ++k) {
        sum += dist.probs[static_cast<std::size_t>(k)] * static_cast<double>(k - c);
    }
    const double s = std::isinf(dist.decay_root) ? 1.0 : dist.decay_root / (dist.decay_root - 1.0);
    sum += dist.probs[static_cast<std::size_t>(m)] * s * (static_cast<double>(m - c) + s - 1.0);
    return std::max(sum, 0.0);
}

// Mean time a frame spends waiting before service starts (queue length over
// throughput).
inline double mean_waiting_time(const StateDistribution& dist) {
    if (dist.spec.arrival_rate <= 0.0) {
        throw ZeroArrivalRate("mean waiting time: arrival rate must be positive");
    }
    return mean_queue_length(dist) / dist.spec.arrival_rate;
}

// Smallest truncation level from a doubling schedule at which the mean wait
// stops moving: |W(2M) - W(M)| <= max(rel_tol |W(M)|, 1e-12 / lambda).  The
// absolute floor admits loads so light that the true wait sits below double
// round-off, where a purely relative test would never settle; it forgives
// only sub-picosecond-scale error in the reported wait.
inline int select_truncation(const QueueSpec& spec, double rel_tol = 1e-8) {
    validate(spec);
    if (!(rel_tol > 0.0)) {
        throw ValidationError("select truncation: rel_tol must be > 0");
    }
    if (spec.arrival_rate == 0.0) {
        return spec.servers + 4;  // empty queue: any level beyond c is exact
    }
    if (!spec.stable()) {
        throw UnstableQueue("select truncation: offered load " +
                            std::to_string(spec.offered_load()) + " >= servers " +
                            std::to_string(spec.servers));
    }
    constexpr int kMaxTruncation = 4096;
    const double floor_abs = 1e-12 / spec.arrival_rate;
    const auto wait_at = [&](int m) {
        return mean_waiting_time(solve_state_distribution(spec, m));
    };

    int m = std::max(spec.servers + 4, 16);
    double w1 = wait_at(m);
    while (true) {
        const double w2 = wait_at(2 * m);
        if (std::abs(w2 - w1) <= std::max(rel_tol * std::abs(w1), floor_abs)) {
            return m;
        }
        m *= 2;
        if (m > kMaxTruncation) {
            throw NoConvergence("select truncation: no level up to 4096 met tolerance");
        }
        w1 = w2;
    }
}

// Full pipeline: pick a truncation level and solve.  A zero arrival rate is
// served degenerately (all mass at zero frames, infinitely fast tail decay)
// so downstream formulas work unchanged.
inline StateDistribution solve_queue(const QueueSpec& spec, double rel_tol = 1e-8) {
    validate(spec);
    if (spec.arrival_rate == 0.0) {
        StateDistribution dist;
        dist.spec = spec;
        dist.decay_root = std::numeric_limits<double>::infinity();
        dist.truncation = spec.servers + 4;
        dist.probs.assign(static_cast<std::size_t>(dist.truncation) + 1, 0.0);
        dist.probs[0] = 1.0;
        return dist;
    }
    return solve_state_distribution(spec, select_truncation(spec, rel_tol));
}

// Exact single-server mean wait G D / (2 (1 - G)); used as an independent
// cross-check of the truncated solver.
inline double md1_exact_waiting(const QueueSpec& spec) {
    validate(spec);
    if (spec.servers != 1) {
        throw NotSingleServer("exact mean wait: defined for a single server only");
    }
    const double g = spec.offered_load();
    if (g >= 1.0) {
        throw UnstableQueue("exact mean wait: offered load " + std::to_string(g) + " >= 1");
    }
    return spec.service_time * g / (2.0 * (1.0 - g));
}

}  // namespace hapvec
