#pragma once

// JSON scenario configs.  Every key is optional and falls back to the
// reference deployment's value; unknown keys are rejected with their full
// path so typos never silently disappear.  All quantities are plain JSON
// numbers in base SI units (Hz, bits, FLOP, FLOP/s, metres, seconds, dB) —
// unit-suffixed strings are rejected rather than guessed at.
//
// Schema (all keys optional):
//   scenario:  gv_count, frame_rate_fps, deadline_s
//   compute:   frame_flop, gv_flops, hap_flops_per_server, hap_servers
//   frames:    uplink_bits, downlink_bits
//   radio:     carrier_hz, bandwidth_hz, excess_loss_db,
//              bandwidth_sharing ("all" | "offloading"),
//              uplink   { eirp_dbw, g_over_t_dbk },
//              downlink { eirp_dbw, g_over_t_dbk }
//   geometry:  hap_altitude_m, aoi_area_m2, slant_distance_m

#include <climits>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "hapvec/errors.hpp"
#include "hapvec/scenario.hpp"

namespace hapvec {

namespace detail {

// Tracks which keys of one JSON object were consumed, so leftovers can be
// reported with their full path.
class ConfigSection {
  public:
    ConfigSection(const nlohmann::json* node, std::string path)
        : node_(node), path_(std::move(path)) {
        if (node_ != nullptr && !node_->is_object()) {
            throw ValidationError(path_ + ": expected an object");
        }
    }

    bool present() const { return node_ != nullptr; }

    void number(const char* key, double& out) {
        const nlohmann::json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number()) {
            throw ValidationError(key_path(key) +
                                  ": expected a plain number in base units");
        }
        out = v->get<double>();
    }

    void number(const char* key, std::optional<double>& out) {
        double value = 0.0;
        const nlohmann::json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number()) {
            throw ValidationError(key_path(key) +
                                  ": expected a plain number in base units");
        }
        value = v->get<double>();
        out = value;
    }

    void integer(const char* key, int& out) {
        const nlohmann::json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number() || !v->is_number_integer()) {
            throw ValidationError(key_path(key) + ": expected an integer");
        }
        const auto wide = v->get<long long>();
        if (wide < INT_MIN || wide > INT_MAX) {
            throw ValidationError(key_path(key) + ": out of range");
        }
        out = static_cast<int>(wide);
    }

    void sharing(const char* key, BandwidthSharing& out) {
        const nlohmann::json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_string()) {
            throw ValidationError(key_path(key) +
                                  ": expected \"all\" or \"offloading\"");
        }
        const auto s = v->get<std::string>();
        if (s == "all") {
            out = BandwidthSharing::kAllVehicles;
        } else if (s == "offloading") {
            out = BandwidthSharing::kOffloadingOnly;
        } else {
            throw ValidationError(key_path(key) + ": expected \"all\" or \"offloading\", got \"" +
                                  s + "\"");
        }
    }

    ConfigSection section(const char* key) {
        const nlohmann::json* v = take(key);
        return ConfigSection(v, key_path(key));
    }

    // Call after all expected keys were consumed.
    void finish() const {
        if (node_ == nullptr) return;
        for (auto it = node_->begin(); it != node_->end(); ++it) {
            if (used_.find(it.key()) == used_.end()) {
                throw ValidationError(key_path(it.key().c_str()) + ": unknown key");
            }
        }
    }

  private:
    const nlohmann::json* take(const char* key) {
        if (node_ == nullptr) return nullptr;
        used_.insert(key);
        const auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    std::string key_path(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

    const nlohmann::json* node_;
    std::string path_;
    std::unordered_set<std::string> used_;
};

}  // namespace detail

// Parses a JSON config text into a scenario, starting from the reference
// deployment and applying present keys.  Throws ParseError for malformed
// JSON, ValidationError (naming the key path) for structural or range
// violations.
inline ScenarioConfig parse_config(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }

    ScenarioConfig cfg = default_scenario();
    detail::ConfigSection top(&root, "");

    auto scenario = top.section("scenario");
    scenario.integer("gv_count", cfg.gv_count);
    scenario.number("frame_rate_fps", cfg.frame_rate);
    scenario.number("deadline_s", cfg.deadline_override_s);
    scenario.finish();

    auto compute = top.section("compute");
    compute.number("frame_flop", cfg.compute.frame_flop);
    compute.number("gv_flops", cfg.compute.gv_flops);
    compute.number("hap_flops_per_server", cfg.compute.hap_flops);
    compute.integer("hap_servers", cfg.compute.hap_servers);
    compute.finish();

    auto frames = top.section("frames");
    frames.number("uplink_bits", cfg.radio.uplink.payload_bits);
    frames.number("downlink_bits", cfg.radio.downlink.payload_bits);
    frames.finish();

    auto radio = top.section("radio");
    radio.number("carrier_hz", cfg.radio.carrier_hz);
    radio.number("bandwidth_hz", cfg.radio.bandwidth_hz);
    radio.number("excess_loss_db", cfg.radio.excess_loss_db);
    radio.sharing("bandwidth_sharing", cfg.radio.sharing);
    auto uplink = radio.section("uplink");
    uplink.number("eirp_dbw", cfg.radio.uplink.eirp_dbw);
    uplink.number("g_over_t_dbk", cfg.radio.uplink.g_over_t_dbk);
    uplink.finish();
    auto downlink = radio.section("downlink");
    downlink.number("eirp_dbw", cfg.radio.downlink.eirp_dbw);
    downlink.number("g_over_t_dbk", cfg.radio.downlink.g_over_t_dbk);
    downlink.finish();
    radio.finish();

    auto geometry = top.section("geometry");
    geometry.number("hap_altitude_m", cfg.geometry.altitude_m);
    geometry.number("aoi_area_m2", cfg.geometry.aoi_area_m2);
    geometry.number("slant_distance_m", cfg.geometry.slant_override_m);
    geometry.finish();

    top.finish();

    validate(cfg);
    return cfg;
}

// Serializes a scenario with every key explicit, so the file documents the
// full parameter set and load(parse(write(cfg))) reproduces cfg exactly.
inline std::string write_config(const ScenarioConfig& cfg) {
    nlohmann::json root;
    root["scenario"]["gv_count"] = cfg.gv_count;
    root["scenario"]["frame_rate_fps"] = cfg.frame_rate;
    if (cfg.deadline_override_s) {
        root["scenario"]["deadline_s"] = *cfg.deadline_override_s;
    }
    root["compute"]["frame_flop"] = cfg.compute.frame_flop;
    root["compute"]["gv_flops"] = cfg.compute.gv_flops;
    root["compute"]["hap_flops_per_server"] = cfg.compute.hap_flops;
    root["compute"]["hap_servers"] = cfg.compute.hap_servers;
    root["frames"]["uplink_bits"] = cfg.radio.uplink.payload_bits;
    root["frames"]["downlink_bits"] = cfg.radio.downlink.payload_bits;
    root["radio"]["carrier_hz"] = cfg.radio.carrier_hz;
    root["radio"]["bandwidth_hz"] = cfg.radio.bandwidth_hz;
    root["radio"]["excess_loss_db"] = cfg.radio.excess_loss_db;
    root["radio"]["bandwidth_sharing"] =
        cfg.radio.sharing == BandwidthSharing::kAllVehicles ? "all" : "offloading";
    root["radio"]["uplink"]["eirp_dbw"] = cfg.radio.uplink.eirp_dbw;
    root["radio"]["uplink"]["g_over_t_dbk"] = cfg.radio.uplink.g_over_t_dbk;
    root["radio"]["downlink"]["eirp_dbw"] = cfg.radio.downlink.eirp_dbw;
    root["radio"]["downlink"]["g_over_t_dbk"] = cfg.radio.downlink.g_over_t_dbk;
    root["geometry"]["hap_altitude_m"] = cfg.geometry.altitude_m;
    root["geometry"]["aoi_area_m2"] = cfg.geometry.aoi_area_m2;
    if (cfg.geometry.slant_override_m) {
        root["geometry"]["slant_distance_m"] = *cfg.geometry.slant_override_m;
    }
    return root.dump(2) + "\n";
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("config: cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw IoError("config: failed reading " + path);
    }
    return parse_config(buffer.str());
}

inline void save_config(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("config: cannot open " + path + " for writing");
    }
    out << write_config(cfg);
    if (!out) {
        throw IoError("config: failed writing " + path);
    }
}

}  // namespace hapvec
