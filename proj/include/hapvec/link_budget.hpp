#pragma once

// Free-space link budget between a ground vehicle and a high-altitude
// platform: slant geometry over a circular area of interest, logarithmic
// path loss, receiver-referred signal-to-noise ratio, and Shannon capacity.

#include <cmath>
#include <optional>
#include <string>

#include "hapvec/errors.hpp"

namespace hapvec {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kLightSpeed = 2.998e8;      // m/s

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

// Platform placement over a circular area of interest.  Vehicles are spread
// uniformly, so the median ground range encloses half the area; the derived
// slant distance stands in for the typical vehicle unless overridden.
struct Geometry {
    double altitude_m = 0.0;
    double aoi_area_m2 = 0.0;
    std::optional<double> slant_override_m;
};

inline void validate(const Geometry& geom) {
    if (!(geom.altitude_m > 0.0) || !std::isfinite(geom.altitude_m)) {
        throw ValidationError("geometry: altitude_m must be finite and > 0");
    }
    if (!(geom.aoi_area_m2 >= 0.0) || !std::isfinite(geom.aoi_area_m2)) {
        throw ValidationError("geometry: aoi_area_m2 must be finite and >= 0");
    }
    if (geom.slant_override_m &&
        (!(*geom.slant_override_m > 0.0) || !std::isfinite(*geom.slant_override_m))) {
        throw ValidationError("geometry: slant_distance_m must be finite and > 0");
    }
}

// Slant distance to the median-range vehicle: ground ranges are distributed
// with half the fleet inside radius sqrt(area / (2 pi)).
inline double median_slant_distance(const Geometry& geom) {
    validate(geom);
    if (geom.slant_override_m) {
        return *geom.slant_override_m;
    }
    const double r2 = geom.aoi_area_m2 / (2.0 * M_PI);
    return std::sqrt(geom.altitude_m * geom.altitude_m + r2);
}

// One directed radio leg.  EIRP and G/T absorb antenna gains and noise
// temperature; excess loss covers atmospheric and implementation margins.
struct LinkBudget {
    double eirp_dbw = 0.0;
    double g_over_t_dbk = 0.0;
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;
    double excess_loss_db = 0.0;
};

inline void validate(const LinkBudget& link) {
    if (!(link.carrier_hz > 0.0) || !std::isfinite(link.carrier_hz)) {
        throw ValidationError("link budget: carrier_hz must be finite and > 0");
    }
    if (!(link.bandwidth_hz > 0.0) || !std::isfinite(link.bandwidth_hz)) {
        throw ValidationError("link budget: bandwidth_hz must be finite and > 0");
    }
    if (!std::isfinite(link.eirp_dbw) || !std::isfinite(link.g_over_t_dbk) ||
        !std::isfinite(link.excess_loss_db)) {
        throw ValidationError("link budget: dB fields must be finite");
    }
}

// Free-space path loss in dB at the given carrier and distance, plus any
// excess margin.
inline double path_loss_db(double carrier_hz, double distance_m, double excess_db = 0.0) {
    if (!(carrier_hz > 0.0) || !(distance_m > 0.0)) {
        throw ValidationError("path loss: carrier_hz and distance_m must be > 0");
    }
    return 20.0 * std::log10(4.0 * M_PI * distance_m * carrier_hz / kLightSpeed) + excess_db;
}

// Receiver signal-to-noise ratio (linear) over the full bandwidth:
// EIRP * (G/T) / (path loss * k * B).
inline double snr_linear(const LinkBudget& link, double distance_m) {
    validate(link);
    const double pl = path_loss_db(link.carrier_hz, distance_m, link.excess_loss_db);
    const double snr_db = link.eirp_dbw + link.g_over_t_dbk - pl - to_db(kBoltzmann) -
                          to_db(link.bandwidth_hz);
    return from_db(snr_db);
}

// Shannon capacity of an allocation of the given width at the given SNR.
inline double capacity_bps(double snr, double allocated_bandwidth_hz) {
    if (!(allocated_bandwidth_hz > 0.0) || !(snr >= 0.0)) {
        throw ValidationError("capacity: bandwidth must be > 0 and snr >= 0");
    }
    return allocated_bandwidth_hz * std::log2(1.0 + snr);
}

// Serialization delay of a payload at a given rate.
inline double transmission_time(double payload_bits, double rate_bps) {
    if (!(payload_bits >= 0.0) || !std::isfinite(payload_bits)) {
        throw ValidationError("transmission time: payload_bits must be finite and >= 0");
    }
    if (!(rate_bps > 0.0)) {
        throw ZeroRate("transmission time: rate must be positive");
    }
    return payload_bits / rate_bps;
}

// One-way speed-of-light delay.
inline double propagation_delay(double distance_m) {
    if (!(distance_m >= 0.0)) {
        throw ValidationError("propagation delay: distance_m must be >= 0");
    }
    return distance_m / kLightSpeed;
}

}  // namespace hapvec
