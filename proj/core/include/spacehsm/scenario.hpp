// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_SCENARIO_HPP
#define SPACEHSM_SCENARIO_HPP

/// \file
/// Scenario configuration: one JSON document fully determines a simulation
/// run. An empty object means "all defaults" (one station, mission-budget
/// link and power numbers, no workload, no adversary). Parsing is strict:
/// unknown keys, type mismatches and constraint violations raise ConfigError
/// naming the offending field path.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spacehsm/link.hpp"
#include "spacehsm/messages.hpp"
#include "spacehsm/power.hpp"
#include "spacehsm/signature.hpp"

namespace spacehsm {

struct ConfigError : std::runtime_error {
    std::string path;
    ConfigError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path.empty() ? message
                                                : field_path + ": " + message),
          path(std::move(field_path)) {}
};

struct StationConfig {
    std::string id = "GND1";
    uint32_t pass_offset_s = 0;

    bool operator==(const StationConfig&) const = default;
};

struct HsmScenarioConfig {
    double fault_rate = 0.0;
    uint32_t retry_limit = 3;
    SignatureScheme scheme = SignatureScheme::Ed25519Pad256;

    bool operator==(const HsmScenarioConfig&) const = default;
};

struct GroundConfig {
    uint32_t beacon_period_s = 60;
    uint32_t reset_delay_s = 30;
    uint32_t grace_window_s = 60;
    uint32_t in_flight_grace_s = 10; // log catch-up grace, see Monitor
    uint32_t terrestrial_latency_s = 1;
    uint32_t request_timeout_s = 45;
    uint32_t request_retries = 6;
    bool broadcast_responses = false;
    uint32_t consensus_threshold = 1;

    bool operator==(const GroundConfig&) const = default;
};

struct WorkloadRequest {
    uint64_t time_us = 0;
    uint32_t csr_bytes = static_cast<uint32_t>(kDefaultCsrSize);
    std::string station; // resolved to a station id at parse time
    std::string id;      // resolved to a unique request id at parse time

    bool operator==(const WorkloadRequest&) const = default;
};

enum class AdversaryActionKind : uint8_t {
    StealKey = 0,
    ForgeRequest = 1,
    SuppressLogSubmission = 2,
    SpoofBeacon = 3,
    InjectFaults = 4,
};

struct AdversaryAction {
    AdversaryActionKind kind = AdversaryActionKind::StealKey;
    uint64_t time_us = 0;  // steal/forge/spoof; inject_faults: window start
    uint64_t until_us = 0; // inject_faults: window end
    double rate = 0.0;     // inject_faults
    uint32_t csr_bytes = static_cast<uint32_t>(kDefaultCsrSize); // forge
    std::string id; // forge: request id to mint; suppress: request id to drop

    bool operator==(const AdversaryAction&) const = default;
};

struct ScenarioConfig {
    uint64_t seed = 1;
    uint64_t duration_us = uint64_t{3} * 5400 * kMicrosPerSecond; // 3 orbits
    std::vector<StationConfig> stations{StationConfig{}};
    LinkConfig link;
    PowerConfig power;
    HsmScenarioConfig hsm;
    GroundConfig ground;
    std::vector<WorkloadRequest> workload;
    std::vector<AdversaryAction> adversary;
    bool peer_hsm = false;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses a JSON scenario document. Throws ConfigError.
ScenarioConfig parse_scenario(const std::string& text);

/// Canonical JSON for a config; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& config);

/// Uplink airtime of one certificate request: the sealed envelope
/// (csr + AEAD overhead) fragmented over AX.25 at the uplink rate.
uint64_t request_airtime_us(const LinkConfig& link, uint32_t csr_bytes);

/// Requests per pass the uplink can carry: floor(pass / request airtime).
uint64_t analytic_capacity(const LinkConfig& link, uint32_t request_bytes);

} // namespace spacehsm

#endif
