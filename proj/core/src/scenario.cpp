// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/scenario.hpp"

#include "spacehsm/aead.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace spacehsm {

namespace {

using nlohmann::json;

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* candidate : allowed) {
            if (key == candidate) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(join_path(path, key), "unknown key");
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                  uint64_t fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
        throw ConfigError(join_path(path, key), "expected a non-negative integer");
    }
    if (v->is_number_integer() && v->get<int64_t>() < 0) {
        throw ConfigError(join_path(path, key), "must be non-negative");
    }
    return v->get<uint64_t>();
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) {
        throw ConfigError(join_path(path, key), "expected a number");
    }
    return v->get<double>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
        throw ConfigError(join_path(path, key), "expected a boolean");
    }
    return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) {
        throw ConfigError(join_path(path, key), "expected a string");
    }
    return v->get<std::string>();
}

/// Seconds (integer or fractional) to microseconds.
uint64_t get_time_us(const json& obj, const std::string& path, const char* key,
                     uint64_t fallback_us) {
    const json* v = find(obj, key);
    if (!v) return fallback_us;
    if (!v->is_number()) {
        throw ConfigError(join_path(path, key), "expected seconds as a number");
    }
    double seconds = v->get<double>();
    if (seconds < 0.0) {
        throw ConfigError(join_path(path, key), "must be non-negative");
    }
    return static_cast<uint64_t>(std::llround(seconds * 1e6));
}

uint32_t get_permille(const json& obj, const std::string& path, const char* key,
                      uint32_t fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) {
        throw ConfigError(join_path(path, key), "expected a fraction");
    }
    double fraction = v->get<double>();
    if (fraction <= 0.0 || fraction > 1.0) {
        throw ConfigError(join_path(path, key), "must be in (0, 1]");
    }
    return static_cast<uint32_t>(std::llround(fraction * 1000.0));
}

uint32_t get_milli(const json& obj, const std::string& path, const char* key,
                   uint32_t fallback_milli) {
    const json* v = find(obj, key);
    if (!v) return fallback_milli;
    if (!v->is_number()) {
        throw ConfigError(join_path(path, key), "expected a number");
    }
    double value = v->get<double>();
    if (value < 0.0) {
        throw ConfigError(join_path(path, key), "must be non-negative");
    }
    return static_cast<uint32_t>(std::llround(value * 1000.0));
}

LinkConfig parse_link(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"uplink_bps", "downlink_bps", "tx_duty_cycle", "pass_duration_s",
                "orbit_period_s", "loss_probability", "duty_window_s"});
    LinkConfig link;
    link.uplink_bps = static_cast<uint32_t>(
        get_uint(obj, path, "uplink_bps", link.uplink_bps));
    link.downlink_bps = static_cast<uint32_t>(
        get_uint(obj, path, "downlink_bps", link.downlink_bps));
    link.tx_duty_permille =
        get_permille(obj, path, "tx_duty_cycle", link.tx_duty_permille);
    link.pass_duration_s = static_cast<uint32_t>(
        get_uint(obj, path, "pass_duration_s", link.pass_duration_s));
    link.orbit_period_s = static_cast<uint32_t>(
        get_uint(obj, path, "orbit_period_s", link.orbit_period_s));
    link.loss_probability =
        get_number(obj, path, "loss_probability", link.loss_probability);
    link.duty_window_s = static_cast<uint32_t>(
        get_uint(obj, path, "duty_window_s", link.duty_window_s));

    if (link.uplink_bps == 0) throw ConfigError(join_path(path, "uplink_bps"), "must be positive");
    if (link.downlink_bps == 0) throw ConfigError(join_path(path, "downlink_bps"), "must be positive");
    if (link.pass_duration_s == 0) throw ConfigError(join_path(path, "pass_duration_s"), "must be positive");
    if (link.orbit_period_s < link.pass_duration_s) {
        throw ConfigError(join_path(path, "orbit_period_s"),
                          "must be at least pass_duration_s");
    }
    if (link.loss_probability < 0.0 || link.loss_probability > 1.0) {
        throw ConfigError(join_path(path, "loss_probability"), "must be in [0, 1]");
    }
    return link;
}

PowerConfig parse_power(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"solar_input_w", "obc_w", "tx_w", "rx_w", "tx_duty", "recharge_w",
                "battery_wh", "daylight_s", "eclipse_s"});
    PowerConfig power;
    power.solar_input_mw = get_milli(obj, path, "solar_input_w", power.solar_input_mw);
    power.obc_mw = get_milli(obj, path, "obc_w", power.obc_mw);
    power.tx_mw = get_milli(obj, path, "tx_w", power.tx_mw);
    power.rx_mw = get_milli(obj, path, "rx_w", power.rx_mw);
    power.tx_duty_permille = get_permille(obj, path, "tx_duty", power.tx_duty_permille);
    power.recharge_mw = get_milli(obj, path, "recharge_w", power.recharge_mw);
    const json* battery = find(obj, "battery_wh");
    if (battery) {
        if (!battery->is_number()) {
            throw ConfigError(join_path(path, "battery_wh"), "expected a number");
        }
        double wh = battery->get<double>();
        if (wh <= 0.0) {
            throw ConfigError(join_path(path, "battery_wh"), "must be positive");
        }
        power.battery_mws = static_cast<uint64_t>(
            std::llround(wh * static_cast<double>(kMilliwattSecondsPerWh)));
    }
    power.daylight_s = static_cast<uint32_t>(
        get_uint(obj, path, "daylight_s", power.daylight_s));
    power.eclipse_s = static_cast<uint32_t>(
        get_uint(obj, path, "eclipse_s", power.eclipse_s));
    if (power.orbit_period_s() == 0) {
        throw ConfigError(join_path(path, "daylight_s"),
                          "daylight_s + eclipse_s must be positive");
    }
    return power;
}

HsmScenarioConfig parse_hsm(const json& obj, const std::string& path) {
    check_keys(obj, path, {"fault_rate", "retry_limit", "scheme"});
    HsmScenarioConfig hsm;
    hsm.fault_rate = get_number(obj, path, "fault_rate", hsm.fault_rate);
    if (hsm.fault_rate < 0.0 || hsm.fault_rate > 1.0) {
        throw ConfigError(join_path(path, "fault_rate"), "must be in [0, 1]");
    }
    hsm.retry_limit = static_cast<uint32_t>(
        get_uint(obj, path, "retry_limit", hsm.retry_limit));
    std::string scheme = get_string(obj, path, "scheme", scheme_name(hsm.scheme));
    auto parsed = scheme_from_name(scheme);
    if (!parsed) {
        throw ConfigError(join_path(path, "scheme"),
                          "unknown scheme '" + scheme + "'");
    }
    hsm.scheme = *parsed;
    return hsm;
}

GroundConfig parse_ground(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"beacon_period_s", "reset_delay_s", "grace_window_s",
                "in_flight_grace_s", "terrestrial_latency_s", "request_timeout_s",
                "request_retries", "broadcast_responses", "consensus_threshold"});
    GroundConfig ground;
    ground.beacon_period_s = static_cast<uint32_t>(
        get_uint(obj, path, "beacon_period_s", ground.beacon_period_s));
    if (ground.beacon_period_s == 0) {
        throw ConfigError(join_path(path, "beacon_period_s"), "must be positive");
    }
    ground.reset_delay_s = static_cast<uint32_t>(
        get_uint(obj, path, "reset_delay_s", ground.reset_delay_s));
    ground.grace_window_s = static_cast<uint32_t>(
        get_uint(obj, path, "grace_window_s", ground.grace_window_s));
    ground.in_flight_grace_s = static_cast<uint32_t>(
        get_uint(obj, path, "in_flight_grace_s", ground.in_flight_grace_s));
    ground.terrestrial_latency_s = static_cast<uint32_t>(
        get_uint(obj, path, "terrestrial_latency_s", ground.terrestrial_latency_s));
    ground.request_timeout_s = static_cast<uint32_t>(
        get_uint(obj, path, "request_timeout_s", ground.request_timeout_s));
    if (ground.request_timeout_s == 0) {
        throw ConfigError(join_path(path, "request_timeout_s"), "must be positive");
    }
    ground.request_retries = static_cast<uint32_t>(
        get_uint(obj, path, "request_retries", ground.request_retries));
    ground.broadcast_responses =
        get_bool(obj, path, "broadcast_responses", ground.broadcast_responses);
    ground.consensus_threshold = static_cast<uint32_t>(
        get_uint(obj, path, "consensus_threshold", ground.consensus_threshold));
    if (ground.consensus_threshold == 0) {
        throw ConfigError(join_path(path, "consensus_threshold"), "must be at least 1");
    }
    return ground;
}

uint32_t valid_csr_bytes(uint64_t value, const std::string& path) {
    if (value < kCsrFixedOverhead) {
        throw ConfigError(path, "csr_bytes must be at least " +
                                    std::to_string(kCsrFixedOverhead));
    }
    if (value + kAeadOverhead > kMaxFragmentPayload) {
        throw ConfigError(path, "csr_bytes exceeds the link fragmentation limit");
    }
    return static_cast<uint32_t>(value);
}

AdversaryActionKind action_kind_from_name(const std::string& name,
                                          const std::string& path) {
    if (name == "steal_key") return AdversaryActionKind::StealKey;
    if (name == "forge_request") return AdversaryActionKind::ForgeRequest;
    if (name == "suppress_log_submission") return AdversaryActionKind::SuppressLogSubmission;
    if (name == "spoof_beacon") return AdversaryActionKind::SpoofBeacon;
    if (name == "inject_faults") return AdversaryActionKind::InjectFaults;
    throw ConfigError(path, "unknown adversary action '" + name + "'");
}

std::string action_kind_name(AdversaryActionKind kind) {
    switch (kind) {
        case AdversaryActionKind::StealKey: return "steal_key";
        case AdversaryActionKind::ForgeRequest: return "forge_request";
        case AdversaryActionKind::SuppressLogSubmission: return "suppress_log_submission";
        case AdversaryActionKind::SpoofBeacon: return "spoof_beacon";
        case AdversaryActionKind::InjectFaults: return "inject_faults";
    }
    return "unknown";
}

double seconds_from_us(uint64_t us) {
    return static_cast<double>(us) / 1e6;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("", "scenario document must be a JSON object");
    }
    check_keys(doc, "",
               {"seed", "duration_s", "stations", "link", "power", "hsm", "ground",
                "workload", "adversary", "peer_hsm"});

    ScenarioConfig config;
    config.seed = get_uint(doc, "", "seed", config.seed);
    config.duration_us = get_time_us(doc, "", "duration_s", config.duration_us);
    if (config.duration_us == 0) {
        throw ConfigError("duration_s", "must be positive");
    }

    if (const json* stations = find(doc, "stations")) {
        if (!stations->is_array() || stations->empty()) {
            throw ConfigError("stations", "expected a non-empty array");
        }
        config.stations.clear();
        std::set<std::string> ids;
        for (size_t i = 0; i < stations->size(); ++i) {
            const json& entry = (*stations)[i];
            std::string path = "stations[" + std::to_string(i) + "]";
            if (!entry.is_object()) {
                throw ConfigError(path, "expected an object");
            }
            check_keys(entry, path, {"id", "pass_offset_s"});
            StationConfig station;
            station.id = get_string(entry, path, "id", "GND" + std::to_string(i + 1));
            if (station.id.empty() || station.id.size() > 6) {
                throw ConfigError(join_path(path, "id"),
                                  "station id must be 1-6 characters (a callsign)");
            }
            if (!ids.insert(station.id).second) {
                throw ConfigError(join_path(path, "id"),
                                  "duplicate station id '" + station.id + "'");
            }
            station.pass_offset_s = static_cast<uint32_t>(
                get_uint(entry, path, "pass_offset_s", 0));
            config.stations.push_back(std::move(station));
        }
    }

    if (const json* link = find(doc, "link")) {
        if (!link->is_object()) throw ConfigError("link", "expected an object");
        config.link = parse_link(*link, "link");
    }
    if (const json* power = find(doc, "power")) {
        if (!power->is_object()) throw ConfigError("power", "expected an object");
        config.power = parse_power(*power, "power");
    }
    if (const json* hsm = find(doc, "hsm")) {
        if (!hsm->is_object()) throw ConfigError("hsm", "expected an object");
        config.hsm = parse_hsm(*hsm, "hsm");
    }
    if (const json* ground = find(doc, "ground")) {
        if (!ground->is_object()) throw ConfigError("ground", "expected an object");
        config.ground = parse_ground(*ground, "ground");
    }

    if (const json* workload = find(doc, "workload")) {
        if (!workload->is_array()) throw ConfigError("workload", "expected an array");
        std::set<std::string> ids;
        for (size_t i = 0; i < workload->size(); ++i) {
            const json& entry = (*workload)[i];
            std::string path = "workload[" + std::to_string(i) + "]";
            if (!entry.is_object()) throw ConfigError(path, "expected an object");
            check_keys(entry, path, {"time_s", "csr_bytes", "station", "id"});
            WorkloadRequest request;
            request.time_us = get_time_us(entry, path, "time_s", 0);
            if (request.time_us > config.duration_us) {
                throw ConfigError(join_path(path, "time_s"),
                                  "beyond the scenario duration");
            }
            request.csr_bytes = valid_csr_bytes(
                get_uint(entry, path, "csr_bytes", kDefaultCsrSize),
                join_path(path, "csr_bytes"));
            request.station =
                get_string(entry, path, "station", config.stations.front().id);
            bool station_known = false;
            for (const auto& station : config.stations) {
                if (station.id == request.station) station_known = true;
            }
            if (!station_known) {
                throw ConfigError(join_path(path, "station"),
                                  "unknown station '" + request.station + "'");
            }
            request.id = get_string(entry, path, "id", "req-" + std::to_string(i));
            if (!ids.insert(request.id).second) {
                throw ConfigError(join_path(path, "id"),
                                  "duplicate request id '" + request.id + "'");
            }
            config.workload.push_back(std::move(request));
        }
    }

    if (const json* adversary = find(doc, "adversary")) {
        if (!adversary->is_array()) throw ConfigError("adversary", "expected an array");
        for (size_t i = 0; i < adversary->size(); ++i) {
            const json& entry = (*adversary)[i];
            std::string path = "adversary[" + std::to_string(i) + "]";
            if (!entry.is_object()) throw ConfigError(path, "expected an object");
            std::string name = get_string(entry, path, "action", "");
            if (name.empty()) {
                throw ConfigError(join_path(path, "action"), "required");
            }
            AdversaryAction action;
            action.kind = action_kind_from_name(name, join_path(path, "action"));
            switch (action.kind) {
                case AdversaryActionKind::StealKey:
                case AdversaryActionKind::SpoofBeacon:
                    check_keys(entry, path, {"action", "time_s"});
                    action.time_us = get_time_us(entry, path, "time_s", 0);
                    break;
                case AdversaryActionKind::ForgeRequest:
                    check_keys(entry, path, {"action", "time_s", "csr_bytes", "id"});
                    action.time_us = get_time_us(entry, path, "time_s", 0);
                    action.csr_bytes = valid_csr_bytes(
                        get_uint(entry, path, "csr_bytes", kDefaultCsrSize),
                        join_path(path, "csr_bytes"));
                    action.id = get_string(entry, path, "id",
                                           "forge-" + std::to_string(i));
                    break;
                case AdversaryActionKind::SuppressLogSubmission:
                    check_keys(entry, path, {"action", "id"});
                    action.id = get_string(entry, path, "id", "");
                    if (action.id.empty()) {
                        throw ConfigError(join_path(path, "id"), "required");
                    }
                    break;
                case AdversaryActionKind::InjectFaults:
                    check_keys(entry, path, {"action", "from_s", "to_s", "rate"});
                    action.time_us = get_time_us(entry, path, "from_s", 0);
                    action.until_us =
                        get_time_us(entry, path, "to_s", config.duration_us);
                    if (action.until_us < action.time_us) {
                        throw ConfigError(join_path(path, "to_s"),
                                          "must not precede from_s");
                    }
                    action.rate = get_number(entry, path, "rate", 0.0);
                    if (action.rate < 0.0 || action.rate > 1.0) {
                        throw ConfigError(join_path(path, "rate"),
                                          "must be in [0, 1]");
                    }
                    break;
            }
            if (action.time_us > config.duration_us) {
                throw ConfigError(join_path(path, name == "inject_faults" ? "from_s"
                                                                          : "time_s"),
                                  "beyond the scenario duration");
            }
            config.adversary.push_back(std::move(action));
        }
    }

    config.peer_hsm = get_bool(doc, "", "peer_hsm", config.peer_hsm);
    return config;
}

std::string serialize_scenario(const ScenarioConfig& config) {
    json doc;
    doc["seed"] = config.seed;
    doc["duration_s"] = seconds_from_us(config.duration_us);
    doc["peer_hsm"] = config.peer_hsm;

    json stations = json::array();
    for (const auto& station : config.stations) {
        stations.push_back({{"id", station.id},
                            {"pass_offset_s", station.pass_offset_s}});
    }
    doc["stations"] = std::move(stations);

    doc["link"] = {{"uplink_bps", config.link.uplink_bps},
                   {"downlink_bps", config.link.downlink_bps},
                   {"tx_duty_cycle", config.link.tx_duty_permille / 1000.0},
                   {"pass_duration_s", config.link.pass_duration_s},
                   {"orbit_period_s", config.link.orbit_period_s},
                   {"loss_probability", config.link.loss_probability},
                   {"duty_window_s", config.link.duty_window_s}};

    doc["power"] = {{"solar_input_w", config.power.solar_input_mw / 1000.0},
                    {"obc_w", config.power.obc_mw / 1000.0},
                    {"tx_w", config.power.tx_mw / 1000.0},
                    {"rx_w", config.power.rx_mw / 1000.0},
                    {"tx_duty", config.power.tx_duty_permille / 1000.0},
                    {"recharge_w", config.power.recharge_mw / 1000.0},
                    {"battery_wh", static_cast<double>(config.power.battery_mws) /
                                       static_cast<double>(kMilliwattSecondsPerWh)},
                    {"daylight_s", config.power.daylight_s},
                    {"eclipse_s", config.power.eclipse_s}};

    doc["hsm"] = {{"fault_rate", config.hsm.fault_rate},
                  {"retry_limit", config.hsm.retry_limit},
                  {"scheme", scheme_name(config.hsm.scheme)}};

    doc["ground"] = {{"beacon_period_s", config.ground.beacon_period_s},
                     {"reset_delay_s", config.ground.reset_delay_s},
                     {"grace_window_s", config.ground.grace_window_s},
                     {"in_flight_grace_s", config.ground.in_flight_grace_s},
                     {"terrestrial_latency_s", config.ground.terrestrial_latency_s},
                     {"request_timeout_s", config.ground.request_timeout_s},
                     {"request_retries", config.ground.request_retries},
                     {"broadcast_responses", config.ground.broadcast_responses},
                     {"consensus_threshold", config.ground.consensus_threshold}};

    json workload = json::array();
    for (const auto& request : config.workload) {
        workload.push_back({{"time_s", seconds_from_us(request.time_us)},
                            {"csr_bytes", request.csr_bytes},
                            {"station", request.station},
                            {"id", request.id}});
    }
    doc["workload"] = std::move(workload);

    json adversary = json::array();
    for (const auto& action : config.adversary) {
        json entry;
        entry["action"] = action_kind_name(action.kind);
        switch (action.kind) {
            case AdversaryActionKind::StealKey:
            case AdversaryActionKind::SpoofBeacon:
                entry["time_s"] = seconds_from_us(action.time_us);
                break;
            case AdversaryActionKind::ForgeRequest:
                entry["time_s"] = seconds_from_us(action.time_us);
                entry["csr_bytes"] = action.csr_bytes;
                entry["id"] = action.id;
                break;
            case AdversaryActionKind::SuppressLogSubmission:
                entry["id"] = action.id;
                break;
            case AdversaryActionKind::InjectFaults:
                entry["from_s"] = seconds_from_us(action.time_us);
                entry["to_s"] = seconds_from_us(action.until_us);
                entry["rate"] = action.rate;
                break;
        }
        adversary.push_back(std::move(entry));
    }
    doc["adversary"] = std::move(adversary);

    return doc.dump(2) + "\n";
}

uint64_t request_airtime_us(const LinkConfig& link, uint32_t csr_bytes) {
    return payload_airtime_us(csr_bytes + kAeadOverhead, link.uplink_bps);
}

uint64_t analytic_capacity(const LinkConfig& link, uint32_t request_bytes) {
    uint64_t airtime = request_airtime_us(link, request_bytes);
    uint64_t pass_us = static_cast<uint64_t>(link.pass_duration_s) * kMicrosPerSecond;
    return pass_us / airtime;
}

} // namespace spacehsm
