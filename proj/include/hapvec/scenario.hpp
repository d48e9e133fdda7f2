#pragma once

// Scenario description: a fleet of ground vehicles producing a fixed-rate
// video stream, each deciding per frame whether to process on board or to
// offload to a shared multi-server high-altitude platform over a radio link.

#include <cmath>
#include <optional>
#include <string>

#include "hapvec/errors.hpp"
#include "hapvec/link_budget.hpp"
#include "hapvec/queueing.hpp"

namespace hapvec {

// Per-frame workload and the processing capacity on each side.
struct ComputeProfile {
    double frame_flop = 0.0;      // work per frame, FLOP
    double gv_flops = 0.0;        // one vehicle's on-board rate, FLOP/s
    double hap_flops = 0.0;       // one platform server's rate, FLOP/s
    int hap_servers = 1;

    double gv_service_time() const { return frame_flop / gv_flops; }
    double hap_service_time() const { return frame_flop / hap_flops; }
};

// How the shared uplink/downlink bandwidth is divided among vehicles.
enum class BandwidthSharing {
    kAllVehicles,      // every vehicle holds a 1/n slice at all times
    kOffloadingOnly,   // only the offloading fraction shares the band
};

// Direction-specific radio parameters; carrier, bandwidth, and margins are
// common to both legs.
struct RadioLeg {
    double eirp_dbw = 0.0;
    double g_over_t_dbk = 0.0;
    double payload_bits = 0.0;
};

struct RadioParams {
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;
    double excess_loss_db = 0.0;
    BandwidthSharing sharing = BandwidthSharing::kAllVehicles;
    RadioLeg uplink;
    RadioLeg downlink;
};

struct ScenarioConfig {
    int gv_count = 0;
    double frame_rate = 0.0;                  // frames per second per vehicle
    std::optional<double> deadline_override_s;  // default: one frame period
    ComputeProfile compute;
    RadioParams radio;
    Geometry geometry;

    // Per-frame deadline; a frame must finish before the next one arrives
    // unless an explicit deadline is configured.
    double deadline() const {
        return deadline_override_s ? *deadline_override_s : 1.0 / frame_rate;
    }

    // One vehicle's on-board queue when a fraction eta of frames offloads.
    QueueSpec gv_queue(double eta) const {
        QueueSpec q;
        q.arrival_rate = (1.0 - eta) * frame_rate;
        q.service_time = compute.gv_service_time();
        q.servers = 1;
        return q;
    }

    // The platform queue aggregating offloaded frames from the whole fleet.
    QueueSpec hap_queue(double eta) const {
        QueueSpec q;
        q.arrival_rate = eta * static_cast<double>(gv_count) * frame_rate;
        q.service_time = compute.hap_service_time();
        q.servers = compute.hap_servers;
        return q;
    }

    LinkBudget uplink_budget() const {
        return LinkBudget{radio.uplink.eirp_dbw, radio.uplink.g_over_t_dbk,
                          radio.carrier_hz, radio.bandwidth_hz, radio.excess_loss_db};
    }

    LinkBudget downlink_budget() const {
        return LinkBudget{radio.downlink.eirp_dbw, radio.downlink.g_over_t_dbk,
                          radio.carrier_hz, radio.bandwidth_hz, radio.excess_loss_db};
    }
};

inline void validate(const ScenarioConfig& cfg) {
    if (cfg.gv_count < 1) {
        throw ValidationError("scenario.gv_count: must be >= 1");
    }
    if (!(cfg.frame_rate > 0.0) || !std::isfinite(cfg.frame_rate)) {
        throw ValidationError("scenario.frame_rate_fps: must be finite and > 0");
    }
    if (cfg.deadline_override_s &&
        (!(*cfg.deadline_override_s > 0.0) || !std::isfinite(*cfg.deadline_override_s))) {
        throw ValidationError("scenario.deadline_s: must be finite and > 0");
    }
    if (!(cfg.compute.frame_flop > 0.0) || !std::isfinite(cfg.compute.frame_flop)) {
        throw ValidationError("compute.frame_flop: must be finite and > 0");
    }
    if (!(cfg.compute.gv_flops > 0.0) || !std::isfinite(cfg.compute.gv_flops)) {
        throw ValidationError("compute.gv_flops: must be finite and > 0");
    }
    if (!(cfg.compute.hap_flops > 0.0) || !std::isfinite(cfg.compute.hap_flops)) {
        throw ValidationError("compute.hap_flops_per_server: must be finite and > 0");
    }
    if (cfg.compute.hap_servers < 1) {
        throw ValidationError("compute.hap_servers: must be >= 1");
    }
    if (!(cfg.radio.uplink.payload_bits > 0.0) || !std::isfinite(cfg.radio.uplink.payload_bits)) {
        throw ValidationError("frames.uplink_bits: must be finite and > 0");
    }
    if (!(cfg.radio.downlink.payload_bits >= 0.0) ||
        !std::isfinite(cfg.radio.downlink.payload_bits)) {
        throw ValidationError("frames.downlink_bits: must be finite and >= 0");
    }
    try {
        validate(cfg.uplink_budget());
        validate(cfg.downlink_budget());
        validate(cfg.geometry);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("radio/geometry: ") + e.what());
    }
}

// Reference rural deployment: one hundred vehicles streaming ten frames per
// second of object-detection work under a one-frame-period deadline, served
// by a fifteen-server platform at twenty kilometres over a thousand square
// kilometres, with a millimetre-wave band shared across the fleet.
inline ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.gv_count = 100;
    cfg.frame_rate = 10.0;
    cfg.compute.frame_flop = 60e9;
    cfg.compute.gv_flops = 800e9;
    cfg.compute.hap_flops = 3000e9;
    cfg.compute.hap_servers = 15;
    cfg.radio.carrier_hz = 38e9;
    cfg.radio.bandwidth_hz = 4e8;
    cfg.radio.excess_loss_db = 0.0;
    cfg.radio.sharing = BandwidthSharing::kAllVehicles;
    cfg.radio.uplink = RadioLeg{33.0, 8.5, 1e6};
    cfg.radio.downlink = RadioLeg{37.0, 4.5, 1e5};
    cfg.geometry.altitude_m = 2e4;
    cfg.geometry.aoi_area_m2 = 1e9;
    return cfg;
}

}  // namespace hapvec
