#pragma once

// Seeded discrete-event simulation of the offloading system, used as an
// independent oracle for every analytical quantity: Poisson frame sources on
// each vehicle, Bernoulli routing by the offloading factor, one M/D/1 queue
// per vehicle, the shared M/D/c platform queue, and deterministic radio
// delays mirroring the analytical model.
//
// Reproducibility: all randomness flows from one 64-bit seed through
// SplitMix64-derived substream seeds (stream 0 routes frames; stream i + 1
// drives vehicle i's interarrival times; simulate_mdc uses stream 1), each
// feeding a std::mt19937_64 whose top 53 bits produce uniform and, via
// inversion, exponential draws.  The event list is keyed by (time, class,
// insertion order) with arrivals ordered before departures at equal times,
// so a fixed SimConfig yields bit-identical results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hapvec/errors.hpp"
#include "hapvec/latency.hpp"
#include "hapvec/queueing.hpp"
#include "hapvec/scenario.hpp"

namespace hapvec {

struct SimConfig {
    ScenarioConfig scenario;
    double eta = 0.0;
    std::uint64_t frame_budget = 1000000;
    double warmup_fraction = 0.1;
    std::uint64_t seed = 1;
    bool collect_trace = false;
};

// Mean and a batch-means standard error (64 batches in frame order; the
// error is an estimate for tolerance checks, not an exact interval).
struct BatchStat {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t count = 0;
};

enum class FramePath : std::uint8_t { kLocal, kOffloaded };

struct FrameRecord {
    std::uint64_t frame_id = 0;
    FramePath path = FramePath::kLocal;
    double gen_time = 0.0;
    double end_time = 0.0;
    bool met_deadline = false;
};

struct SimStats {
    // Queue length seen by each post-warmup arrival (the platform queue in
    // the system simulation), normalized to a distribution.
    std::vector<double> state_probs;
    BatchStat wait;          // queueing wait over all measured frames
    BatchStat wait_gv;
    BatchStat wait_hap;
    BatchStat latency;       // end-to-end time over all measured frames
    BatchStat latency_gv;
    BatchStat latency_hap;
    BatchStat deadline_fraction;      // zero-count unless a deadline applies
    BatchStat deadline_fraction_gv;
    BatchStat deadline_fraction_hap;
    std::uint64_t frames_measured = 0;
    std::uint64_t frames_gv = 0;
    std::uint64_t frames_hap = 0;
    double time_avg_queue_len = 0.0;   // waiting frames, post-warmup window
    double measured_arrival_rate = 0.0;
    std::vector<FrameRecord> trace;    // filled only when collect_trace is set
};

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Seed of substream `stream` for a master seed: the (stream+1)-th SplitMix64
// output.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= stream; ++i) {
        out = splitmix64_next(state);
    }
    return out;
}

inline double uniform_draw(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double exponential_draw(std::mt19937_64& gen, double rate) {
    return -std::log1p(-uniform_draw(gen)) / rate;
}

// Streaming batch-means accumulator: values land in one of 64 batches by
// measured-frame index, so the estimate is independent of completion order.
class BatchAccumulator {
  public:
    explicit BatchAccumulator(std::uint64_t expected_count)
        : batch_width_(std::max<std::uint64_t>(expected_count / kBatches, 1)) {}

    void add(std::uint64_t measured_index, double value) {
        const std::uint64_t b = std::min<std::uint64_t>(measured_index / batch_width_,
                                                        kBatches - 1);
        sums_[b] += value;
        counts_[b] += 1;
        total_sum_ += value;
        total_count_ += 1;
    }

    BatchStat finalize() const {
        BatchStat stat;
        stat.count = total_count_;
        if (total_count_ == 0) {
            return stat;
        }
        stat.mean = total_sum_ / static_cast<double>(total_count_);
        std::vector<double> means;
        means.reserve(kBatches);
        for (std::size_t b = 0; b < kBatches; ++b) {
            if (counts_[b] > 0) {
                means.push_back(sums_[b] / static_cast<double>(counts_[b]));
            }
        }
        if (means.size() >= 2) {
            double mean_of_means = 0.0;
            for (double m : means) mean_of_means += m;
            mean_of_means /= static_cast<double>(means.size());
            double var = 0.0;
            for (double m : means) var += (m - mean_of_means) * (m - mean_of_means);
            var /= static_cast<double>(means.size() - 1);
            stat.std_error = std::sqrt(var / static_cast<double>(means.size()));
        }
        return stat;
    }

  private:
    static constexpr std::size_t kBatches = 64;
    std::uint64_t batch_width_;
    double sums_[kBatches] = {};
    std::uint64_t counts_[kBatches] = {};
    double total_sum_ = 0.0;
    std::uint64_t total_count_ = 0;
};

enum class EventKind : std::uint8_t {
    kSourceArrival,    // a vehicle emits a frame (or the single queue's arrival)
    kLocalDeparture,   // a vehicle's server finishes a frame
    kHapArrival,       // an offloaded frame reaches the platform queue
    kHapDeparture,     // a platform server finishes a frame
};

struct Event {
    double time = 0.0;
    std::uint8_t priority = 0;  // arrivals order before departures at equal times
    std::uint64_t seq = 0;      // insertion order breaks remaining ties
    EventKind kind = EventKind::kSourceArrival;
    std::uint32_t source = 0;
    std::uint64_t frame_id = 0;
    double gen_time = 0.0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.seq > b.seq;
    }
};

using EventList = std::priority_queue<Event, std::vector<Event>, EventAfter>;

inline void check_sim_args(std::uint64_t frames, double warmup_fraction) {
    if (frames < 10000) {
        throw ValidationError("simulation: frame budget must be at least 10^4");
    }
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 0.5)) {
        throw ValidationError("simulation: warmup_fraction must lie in [0, 0.5)");
    }
}

}  // namespace detail

// Simulates one FCFS M/D/c queue in isolation: Poisson arrivals at the
// spec's rate, deterministic service, queue length recorded at every
// post-warmup arrival epoch, per-frame waits batched in arrival order.
inline SimStats simulate_mdc(const QueueSpec& spec, std::uint64_t frames,
                             std::uint64_t seed, double warmup_fraction = 0.1) {
    validate(spec);
    detail::check_sim_args(frames, warmup_fraction);
    if (spec.arrival_rate <= 0.0) {
        throw ZeroArrivalRate("simulate_mdc: arrival rate must be positive");
    }
    if (!spec.stable()) {
        throw UnstableQueue("simulate_mdc: offered load " +
                            std::to_string(spec.offered_load()) + " >= servers " +
                            std::to_string(spec.servers));
    }

    std::mt19937_64 gen(detail::stream_seed(seed, 1));
    const double service = spec.service_time;
    const int servers = spec.servers;
    const std::uint64_t warmup_count =
        static_cast<std::uint64_t>(static_cast<double>(frames) * warmup_fraction);
    const std::uint64_t measured_total = frames - warmup_count;

    detail::EventList fel;
    std::uint64_t seq = 0;
    const auto push = [&](detail::Event ev) {
        ev.seq = seq++;
        ev.priority = (ev.kind == detail::EventKind::kSourceArrival) ? 0 : 1;
        fel.push(ev);
    };

    detail::Event first;
    first.kind = detail::EventKind::kSourceArrival;
    first.time = detail::exponential_draw(gen, spec.arrival_rate);
    first.frame_id = 0;
    push(first);

    int busy = 0;
    std::deque<std::pair<double, std::uint64_t>> waiting;  // (arrival time, frame)
    std::vector<std::uint64_t> hist;
    detail::BatchAccumulator wait_acc(measured_total);
    detail::BatchAccumulator latency_acc(measured_total);
    double window_start = 0.0;
    double last_time = 0.0;
    double queue_area = 0.0;
    double end_time = 0.0;
    bool window_open = false;

    const auto record = [&](std::uint64_t id, double wait) {
        if (id < warmup_count) return;
        const std::uint64_t m = id - warmup_count;
        wait_acc.add(m, wait);
        latency_acc.add(m, wait + service);
    };

    while (!fel.empty()) {
        const detail::Event ev = fel.top();
        fel.pop();
        if (window_open) {
            queue_area += static_cast<double>(waiting.size()) * (ev.time - last_time);
        }
        last_time = ev.time;
        end_time = ev.time;

        if (ev.kind == detail::EventKind::kSourceArrival) {
            const std::uint64_t id = ev.frame_id;
            if (id >= warmup_count) {
                const std::size_t in_system = static_cast<std::size_t>(busy) + waiting.size();
                if (hist.size() <= in_system) hist.resize(in_system + 1, 0);
                hist[in_system] += 1;
                if (!window_open) {
                    window_open = true;
                    window_start = ev.time;
                }
            }
            if (id + 1 < frames) {
                detail::Event next;
                next.kind = detail::EventKind::kSourceArrival;
                next.time = ev.time + detail::exponential_draw(gen, spec.arrival_rate);
                next.frame_id = id + 1;
                push(next);
            }
            if (busy < servers) {
                ++busy;
                record(id, 0.0);
                detail::Event dep;
                dep.kind = detail::EventKind::kLocalDeparture;
                dep.time = ev.time + service;
                push(dep);
            } else {
                waiting.emplace_back(ev.time, id);
            }
        } else {
            --busy;
            if (!waiting.empty()) {
                const auto [arr_time, id] = waiting.front();
                waiting.pop_front();
                ++busy;
                record(id, ev.time - arr_time);
                detail::Event dep;
                dep.kind = detail::EventKind::kLocalDeparture;
                dep.time = ev.time + service;
                push(dep);
            }
        }
        if (busy < servers && !waiting.empty()) {
            throw Error("simulate_mdc: work conservation violated");
        }
    }

    SimStats stats;
    stats.frames_measured = measured_total;
    stats.frames_gv = measured_total;
    stats.wait = wait_acc.finalize();
    stats.wait_gv = stats.wait;
    stats.latency = latency_acc.finalize();
    stats.latency_gv = stats.latency;
    std::uint64_t hist_total = 0;
    for (std::uint64_t h : hist) hist_total += h;
    stats.state_probs.resize(hist.size());
    for (std::size_t j = 0; j < hist.size(); ++j) {
        stats.state_probs[j] =
            static_cast<double>(hist[j]) / static_cast<double>(hist_total);
    }
    const double window = end_time - window_start;
    if (window > 0.0) {
        stats.time_avg_queue_len = queue_area / window;
        stats.measured_arrival_rate = static_cast<double>(hist_total) / window;
    }
    return stats;
}

// Simulates the full offloading system.  Every vehicle is an independent
// Poisson source; each generated frame is routed by an independent Bernoulli
// draw; offloaded frames traverse uplink + propagation, the shared platform
// queue, then service + propagation + downlink.  Per-frame end-to-end times
// are compared against the scenario deadline.  The reported state
// distribution is the platform queue's, seen at its own arrival epochs.
inline SimStats simulate_system(const SimConfig& sim) {
    const ScenarioConfig& cfg = sim.scenario;
    validate(cfg);
    detail::check_eta(sim.eta);
    detail::check_sim_args(sim.frame_budget, sim.warmup_fraction);
    if (sim.eta < 1.0 && !cfg.gv_queue(sim.eta).stable()) {
        throw UnstableQueue("simulate_system: vehicle queue unstable at this factor");
    }
    if (sim.eta > 0.0 && !cfg.hap_queue(sim.eta).stable()) {
        throw UnstableQueue("simulate_system: platform queue unstable at this factor");
    }

    const double eta = sim.eta;
    const double t_max = cfg.deadline();
    const CommDelays comm = comm_delays(cfg, eta);
    const double one_way_prop = 0.5 * comm.round_trip_prop_s;
    const double service_gv = cfg.compute.gv_service_time();
    const double service_hap = cfg.compute.hap_service_time();
    const int hap_servers = cfg.compute.hap_servers;
    const int n = cfg.gv_count;
    const std::uint64_t budget = sim.frame_budget;
    const std::uint64_t warmup_count =
        static_cast<std::uint64_t>(static_cast<double>(budget) * sim.warmup_fraction);
    const std::uint64_t measured_total = budget - warmup_count;

    std::mt19937_64 routing(detail::stream_seed(sim.seed, 0));
    std::vector<std::mt19937_64> sources;
    sources.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        sources.emplace_back(detail::stream_seed(sim.seed, static_cast<std::uint64_t>(i) + 1));
    }

    detail::EventList fel;
    std::uint64_t seq = 0;
    const auto push = [&](detail::Event ev) {
        ev.seq = seq++;
        ev.priority = (ev.kind == detail::EventKind::kSourceArrival ||
                       ev.kind == detail::EventKind::kHapArrival)
                          ? 0
                          : 1;
        fel.push(ev);
    };

    for (int i = 0; i < n; ++i) {
        detail::Event ev;
        ev.kind = detail::EventKind::kSourceArrival;
        ev.source = static_cast<std::uint32_t>(i);
        ev.time = detail::exponential_draw(sources[static_cast<std::size_t>(i)],
                                           cfg.frame_rate);
        push(ev);
    }

    std::vector<std::uint8_t> gv_busy(static_cast<std::size_t>(n), 0);
    std::vector<std::deque<std::pair<double, std::uint64_t>>> gv_waiting(
        static_cast<std::size_t>(n));
    int hap_busy = 0;
    struct HapFrame {
        double arrival_time;
        std::uint64_t frame_id;
        double gen_time;
    };
    std::deque<HapFrame> hap_waiting;

    detail::BatchAccumulator wait_all(measured_total), wait_gv(measured_total),
        wait_hap(measured_total), lat_all(measured_total), lat_gv(measured_total),
        lat_hap(measured_total), met_all(measured_total), met_gv(measured_total),
        met_hap(measured_total);
    std::vector<std::uint64_t> hap_hist;
    std::uint64_t hap_hist_total = 0;
    double hap_window_start = 0.0;
    double hap_last_time = 0.0;
    double hap_queue_area = 0.0;
    double end_time = 0.0;
    bool hap_window_open = false;
    std::uint64_t generated = 0;

    SimStats stats;

    const auto record = [&](std::uint64_t id, FramePath path, double gen_time,
                            double wait, double latency) {
        if (id < warmup_count) return;
        const std::uint64_t m = id - warmup_count;
        const bool met = latency <= t_max;
        wait_all.add(m, wait);
        lat_all.add(m, latency);
        met_all.add(m, met ? 1.0 : 0.0);
        if (path == FramePath::kLocal) {
            wait_gv.add(m, wait);
            lat_gv.add(m, latency);
            met_gv.add(m, met ? 1.0 : 0.0);
        } else {
            wait_hap.add(m, wait);
            lat_hap.add(m, latency);
            met_hap.add(m, met ? 1.0 : 0.0);
        }
        if (sim.collect_trace) {
            stats.trace.push_back({id, path, gen_time, gen_time + latency, met});
        }
    };

    while (!fel.empty()) {
        const detail::Event ev = fel.top();
        fel.pop();
        if (hap_window_open) {
            hap_queue_area +=
                static_cast<double>(hap_waiting.size()) * (ev.time - hap_last_time);
        }
        hap_last_time = ev.time;
        end_time = ev.time;

        switch (ev.kind) {
            case detail::EventKind::kSourceArrival: {
                if (generated >= budget) {
                    break;  // the merged arrival stream is truncated at the budget
                }
                const std::uint64_t id = generated++;
                const std::uint32_t src = ev.source;
                if (generated < budget) {
                    detail::Event next;
                    next.kind = detail::EventKind::kSourceArrival;
                    next.source = src;
                    next.time = ev.time + detail::exponential_draw(
                                              sources[src], cfg.frame_rate);
                    push(next);
                }
                const bool offload = detail::uniform_draw(routing) < eta;
                if (offload) {
                    detail::Event arr;
                    arr.kind = detail::EventKind::kHapArrival;
                    arr.time = ev.time + comm.uplink_s + one_way_prop;
                    arr.frame_id = id;
                    arr.gen_time = ev.time;
                    push(arr);
                } else if (!gv_busy[src]) {
                    gv_busy[src] = 1;
                    record(id, FramePath::kLocal, ev.time, 0.0, service_gv);
                    detail::Event dep;
                    dep.kind = detail::EventKind::kLocalDeparture;
                    dep.source = src;
                    dep.time = ev.time + service_gv;
                    push(dep);
                } else {
                    gv_waiting[src].emplace_back(ev.time, id);
                }
                break;
            }
            case detail::EventKind::kLocalDeparture: {
                const std::uint32_t src = ev.source;
                gv_busy[src] = 0;
                if (!gv_waiting[src].empty()) {
                    const auto [arr_time, id] = gv_waiting[src].front();
                    gv_waiting[src].pop_front();
                    gv_busy[src] = 1;
                    const double wait = ev.time - arr_time;
                    record(id, FramePath::kLocal, arr_time, wait, wait + service_gv);
                    detail::Event dep;
                    dep.kind = detail::EventKind::kLocalDeparture;
                    dep.source = src;
                    dep.time = ev.time + service_gv;
                    push(dep);
                }
                if (!gv_busy[src] && !gv_waiting[src].empty()) {
                    throw Error("simulate_system: vehicle work conservation violated");
                }
                break;
            }
            case detail::EventKind::kHapArrival: {
                if (ev.frame_id >= warmup_count) {
                    const std::size_t in_system =
                        static_cast<std::size_t>(hap_busy) + hap_waiting.size();
                    if (hap_hist.size() <= in_system) hap_hist.resize(in_system + 1, 0);
                    hap_hist[in_system] += 1;
                    hap_hist_total += 1;
                    if (!hap_window_open) {
                        hap_window_open = true;
                        hap_window_start = ev.time;
                    }
                }
                if (hap_busy < hap_servers) {
                    ++hap_busy;
                    const double latency =
                        (ev.time - ev.gen_time) + service_hap + one_way_prop + comm.downlink_s;
                    record(ev.frame_id, FramePath::kOffloaded, ev.gen_time, 0.0, latency);
                    detail::Event dep;
                    dep.kind = detail::EventKind::kHapDeparture;
                    dep.time = ev.time + service_hap;
                    push(dep);
                } else {
                    hap_waiting.push_back({ev.time, ev.frame_id, ev.gen_time});
                }
                break;
            }
            case detail::EventKind::kHapDeparture: {
                --hap_busy;
                if (!hap_waiting.empty()) {
                    const HapFrame frame = hap_waiting.front();
                    hap_waiting.pop_front();
                    ++hap_busy;
                    const double wait = ev.time - frame.arrival_time;
                    const double latency = (ev.time - frame.gen_time) + service_hap +
                                           one_way_prop + comm.downlink_s;
                    record(frame.frame_id, FramePath::kOffloaded, frame.gen_time, wait,
                           latency);
                    detail::Event dep;
                    dep.kind = detail::EventKind::kHapDeparture;
                    dep.time = ev.time + service_hap;
                    push(dep);
                }
                if (hap_busy < hap_servers && !hap_waiting.empty()) {
                    throw Error("simulate_system: platform work conservation violated");
                }
                break;
            }
        }
    }

    stats.wait = wait_all.finalize();
    stats.wait_gv = wait_gv.finalize();
    stats.wait_hap = wait_hap.finalize();
    stats.latency = lat_all.finalize();
    stats.latency_gv = lat_gv.finalize();
    stats.latency_hap = lat_hap.finalize();
    stats.deadline_fraction = met_all.finalize();
    stats.deadline_fraction_gv = met_gv.finalize();
    stats.deadline_fraction_hap = met_hap.finalize();
    stats.frames_measured = stats.deadline_fraction.count;
    stats.frames_gv = stats.deadline_fraction_gv.count;
    stats.frames_hap = stats.deadline_fraction_hap.count;
    stats.state_probs.resize(hap_hist.size());
    for (std::size_t j = 0; j < hap_hist.size(); ++j) {
        stats.state_probs[j] =
            static_cast<double>(hap_hist[j]) / static_cast<double>(hap_hist_total);
    }
    const double window = end_time - hap_window_start;
    if (hap_window_open && window > 0.0) {
        stats.time_avg_queue_len = hap_queue_area / window;
        stats.measured_arrival_rate =
            static_cast<double>(hap_hist_total) / window;
    }
    if (sim.collect_trace) {
        std::sort(stats.trace.begin(), stats.trace.end(),
                  [](const FrameRecord& a, const FrameRecord& b) {
                      return a.frame_id < b.frame_id;
                  });
    }
    return stats;
}

}  // namespace hapvec
