#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hapvec/queueing.hpp"

using namespace hapvec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent check that tau satisfies its defining equation in log form.
double root_residual(const QueueSpec& spec, double tau) {
    return std::abs(spec.servers * std::log(tau) - spec.offered_load() * (tau - 1.0));
}

QueueSpec make_spec(double lambda, double d, int c) {
    QueueSpec s;
    s.arrival_rate = lambda;
    s.service_time = d;
    s.servers = c;
    return s;
}

}  // namespace

TEST_CASE("offered load and stability flag") {
    const QueueSpec s = make_spec(10.0, 0.075, 1);
    REQUIRE_THAT(s.offered_load(), WithinRel(0.75, 1e-15));
    REQUIRE(s.stable());

    const QueueSpec boundary = make_spec(1.0 / 0.075, 0.075, 1);
    REQUIRE_FALSE(boundary.stable());

    const QueueSpec multi = make_spec(700.0, 0.02, 15);
    REQUIRE_THAT(multi.offered_load(), WithinRel(14.0, 1e-15));
    REQUIRE(multi.stable());
}

TEST_CASE("spec validation rejects bad fields") {
    REQUIRE_THROWS_AS(validate(make_spec(-1.0, 0.1, 1)), ValidationError);
    REQUIRE_THROWS_AS(validate(make_spec(1.0, 0.0, 1)), ValidationError);
    REQUIRE_THROWS_AS(validate(make_spec(1.0, -0.1, 1)), ValidationError);
    REQUIRE_THROWS_AS(validate(make_spec(1.0, 0.1, 0)), ValidationError);
    REQUIRE_THROWS_AS(validate(make_spec(std::numeric_limits<double>::quiet_NaN(), 0.1, 1)),
                      ValidationError);
}

TEST_CASE("decay root for a single server at half load") {
    const QueueSpec s = make_spec(0.5, 1.0, 1);
    const double tau = compute_decay_root(s);
    REQUIRE_THAT(tau, WithinRel(3.5128624172523386, 1e-12));
    REQUIRE(root_residual(s, tau) < 1e-12);
}

TEST_CASE("decay root satisfies its equation across loads and server counts") {
    for (int c : {1, 5, 15}) {
        for (double util : {0.1, 0.3, 0.6, 0.9, 0.99}) {
            const QueueSpec s = make_spec(util * c / 0.02, 0.02, c);
            const double tau = compute_decay_root(s);
            REQUIRE(tau > 1.0);
            REQUIRE(root_residual(s, tau) < 1e-12);
        }
    }
}

TEST_CASE("decay root grows without bound as load vanishes") {
    const QueueSpec s = make_spec(1e-6, 0.075, 1);
    const double tau = compute_decay_root(s);
    REQUIRE(tau > 1e6);
    REQUIRE(std::isfinite(tau));
    REQUIRE(root_residual(s, tau) < 1e-12);
}

TEST_CASE("decay root approaches one in heavy traffic") {
    const QueueSpec s = make_spec(0.99 * 15.0 / 0.02, 0.02, 15);
    const double tau = compute_decay_root(s);
    REQUIRE(tau > 1.0);
    REQUIRE(tau < 1.05);
    REQUIRE(root_residual(s, tau) < 1e-12);
}

TEST_CASE("decay root error conditions") {
    REQUIRE_THROWS_AS(compute_decay_root(make_spec(20.0, 0.075, 1)), UnstableQueue);
    REQUIRE_THROWS_AS(compute_decay_root(make_spec(1.0 / 0.075, 0.075, 1)), UnstableQueue);
    REQUIRE_THROWS_AS(compute_decay_root(make_spec(0.0, 0.075, 1)), ZeroArrivalRate);
}

TEST_CASE("single-server distribution matches closed forms") {
    const QueueSpec s = make_spec(10.0, 0.075, 1);
    const StateDistribution dist = solve_queue(s);

    // Empty-system probability is 1 - G; the one-frame probability follows
    // from the first balance equation as (1 - G)(e^G - 1).
    REQUIRE_THAT(state_probability(dist, 0), WithinAbs(0.25, 1e-9));
    REQUIRE_THAT(state_probability(dist, 1), WithinRel(0.2792500041531687, 1e-9));

    REQUIRE_THAT(mean_waiting_time(dist), WithinRel(0.1125, 1e-9));
    REQUIRE_THAT(mean_queue_length(dist), WithinRel(1.125, 1e-9));
    REQUIRE_THAT(md1_exact_waiting(s), WithinRel(0.1125, 1e-15));
}

TEST_CASE("single-server distribution at light load") {
    const QueueSpec s = make_spec(5.0, 0.075, 1);
    const StateDistribution dist = solve_queue(s);
    REQUIRE_THAT(state_probability(dist, 0), WithinAbs(0.625, 1e-9));
    REQUIRE_THAT(state_probability(dist, 2), WithinRel(0.07274176344540498, 1e-9));
    REQUIRE_THAT(mean_waiting_time(dist), WithinRel(0.0225, 1e-9));
}

TEST_CASE("truncated solver agrees with the exact single-server mean wait") {
    for (double g : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        const QueueSpec s = make_spec(g / 0.075, 0.075, 1);
        const double exact = md1_exact_waiting(s);
        const double solved = mean_waiting_time(solve_queue(s));
        REQUIRE_THAT(solved, WithinRel(exact, 1e-6));
    }
}

TEST_CASE("multi-server mean waits match frozen references") {
    const QueueSpec s1 = make_spec(450.0, 0.02, 15);
    REQUIRE(select_truncation(s1) == 38);
    REQUIRE_THAT(mean_waiting_time(solve_queue(s1)),
                 WithinRel(0.00010368403462174261, 1e-9));

    const QueueSpec s2 = make_spec(621.65, 0.02, 15);
    REQUIRE_THAT(mean_waiting_time(solve_queue(s2)),
                 WithinRel(0.0016380402840475371, 1e-9));
}

TEST_CASE("closed-form queue length equals brute-force tail summation") {
    for (int c : {1, 5, 15}) {
        for (double util : {0.3, 0.6, 0.9}) {
            const QueueSpec s = make_spec(util * c / 0.02, 0.02, c);
            const StateDistribution dist = solve_queue(s);
            double brute = 0.0;
            for (long long k = c; k <= dist.truncation + 4000; ++k) {
                brute += static_cast<double>(k - c) * state_probability(dist, k);
            }
            const double closed = mean_queue_length(dist);
            if (closed > 1e-30) {
                REQUIRE_THAT(closed, WithinRel(brute, 1e-9));
            } else {
                REQUIRE_THAT(closed, WithinAbs(brute, 1e-15));
            }
        }
    }
}

TEST_CASE("state probabilities beyond the truncation decay geometrically") {
    const QueueSpec s = make_spec(10.0, 0.075, 1);
    const StateDistribution dist = solve_queue(s);
    const long long m = dist.truncation;
    const double pm = state_probability(dist, m);
    REQUIRE(pm > 0.0);
    REQUIRE_THAT(state_probability(dist, m + 5),
                 WithinRel(pm * std::pow(1.0 / dist.decay_root, 5.0), 1e-12));
}

TEST_CASE("cumulative probability reaches one and handles edge indices") {
    const QueueSpec s = make_spec(621.65, 0.02, 15);
    const StateDistribution dist = solve_queue(s);
    REQUIRE(cumulative_probability(dist, -1) == 0.0);
    REQUIRE_THAT(cumulative_probability(dist, dist.truncation + 2000), WithinAbs(1.0, 1e-9));

    // Partial sums are consistent with pointwise probabilities.
    const long long j = dist.truncation + 3;
    double manual = 0.0;
    for (long long i = 0; i <= j; ++i) manual += state_probability(dist, i);
    REQUIRE_THAT(cumulative_probability(dist, j), WithinRel(manual, 1e-12));
}

TEST_CASE("zero arrival rate yields the degenerate empty-system distribution") {
    const QueueSpec s = make_spec(0.0, 0.02, 15);
    REQUIRE(select_truncation(s) == 19);
    const StateDistribution dist = solve_queue(s);
    REQUIRE(dist.truncation == 19);
    REQUIRE(std::isinf(dist.decay_root));
    REQUIRE(state_probability(dist, 0) == 1.0);
    REQUIRE(state_probability(dist, 1) == 0.0);
    REQUIRE(state_probability(dist, dist.truncation + 7) == 0.0);
    REQUIRE(cumulative_probability(dist, 0) == 1.0);
    REQUIRE(mean_queue_length(dist) == 0.0);
    REQUIRE_THROWS_AS(mean_waiting_time(dist), ZeroArrivalRate);
}

TEST_CASE("solver preconditions") {
    REQUIRE_THROWS_AS(solve_state_distribution(make_spec(20.0, 0.075, 1), 32), UnstableQueue);
    REQUIRE_THROWS_AS(solve_state_distribution(make_spec(0.0, 0.075, 1), 32), ZeroArrivalRate);
    REQUIRE_THROWS_AS(solve_state_distribution(make_spec(5.0, 0.02, 15), 15), ValidationError);
    REQUIRE_THROWS_AS(solve_queue(make_spec(800.0, 0.02, 15)), UnstableQueue);
}

TEST_CASE("exact single-server formula preconditions") {
    REQUIRE_THROWS_AS(md1_exact_waiting(make_spec(5.0, 0.02, 15)), NotSingleServer);
    REQUIRE_THROWS_AS(md1_exact_waiting(make_spec(14.0, 0.075, 1)), UnstableQueue);
}

TEST_CASE("heavy traffic stays well conditioned") {
    const double util = 1.0 - 1e-6;
    const QueueSpec s = make_spec(util * 15.0 / 0.02, 0.02, 15);
    const StateDistribution dist = solve_queue(s);
    const double w = mean_waiting_time(dist);
    // Diffusion-scale wait for this load is about 1/(2 (c/D - lambda)).
    REQUIRE_THAT(w, WithinRel(666.67, 5e-3));
    REQUIRE(dist.truncation <= 4096);
}

TEST_CASE("ultra-light multi-server load converges via the absolute floor") {
    const QueueSpec s = make_spec(0.16 * 15.0 / 0.02, 0.02, 15);
    const StateDistribution dist = solve_queue(s);
    const double w = mean_waiting_time(dist);
    REQUIRE(w >= 0.0);
    REQUIRE(w < 1e-9);
}
