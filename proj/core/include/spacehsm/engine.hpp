// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_ENGINE_HPP
#define SPACEHSM_ENGINE_HPP

/// \file
/// Deterministic discrete-event simulation of the full system: the satellite
/// device, ground stations with bandwidth-constrained AX.25 links, the
/// terrestrial certificate log and monitor, the reset controller, the power
/// budget, and a scripted adversary. One ScenarioConfig fully determines a
/// run; two runs of the same config produce byte-identical event streams.
///
/// Events are newline-delimited JSON records with a fixed key order:
///   {"time":"<sec.micros>","actor":"<id>","kind":"<kind>","detail":{...}}
/// Frame transmissions carry the lowercase hex dump of the full encoded
/// frame, so the event stream is a complete on-air record.

#include <cstdint>
#include <string>
#include <vector>

#include "spacehsm/ground.hpp"
#include "spacehsm/scenario.hpp"

namespace spacehsm {

struct Metrics {
    // Certificate conservation: every signed certificate ends the run in
    // exactly one of logged / suppressed / orphaned / in-flight.
    uint64_t certs_signed = 0;
    uint64_t certs_logged = 0;
    uint64_t certs_suppressed = 0; // withheld from the log by the adversary
    uint64_t certs_orphaned = 0;   // stranded by an epoch transition
    uint64_t certs_in_flight = 0;  // still in transit when the run ended

    uint64_t requests_submitted = 0;
    uint64_t requests_completed = 0;
    uint64_t requests_failed = 0;
    // Completions attributed to the visibility window whose uplink airtime
    // the request consumed, in chronological window order.
    std::vector<uint64_t> requests_completed_per_pass;

    uint64_t alarms = 0;
    uint64_t alarms_mismatch = 0;
    uint64_t alarms_epoch_skew = 0;
    uint64_t alarms_spoof = 0;
    // Seconds from each violation (first withheld certificate, spoofed
    // frame) to the alarm that exposed it, in alarm order.
    std::vector<double> time_to_detection_s;

    uint64_t resets = 0;
    uint64_t epoch_transitions = 0;
    uint64_t faults_detected = 0;

    uint64_t beacons_sent = 0;
    uint64_t beacons_observed = 0;
    uint64_t attestations_verified = 0;

    uint64_t frames_tx = 0;
    uint64_t frames_rx = 0;
    uint64_t frames_dropped = 0;
    uint64_t uplink_airtime_us = 0;
    uint64_t downlink_airtime_us = 0;
    uint64_t analytic_capacity = 0;

    double max_dod_percent = 0.0;
    uint64_t min_charge_mws = 0;
    uint64_t brownouts = 0;

    double mean_completion_latency_s = 0.0;

    /// Deterministic fixed-order JSON document.
    std::string to_json() const;
};

struct RunResult {
    std::vector<std::string> events; // JSONL lines, one record each
    Metrics metrics;
    /// Violations of the engine's runtime invariants (conservation,
    /// per-pass capacity, event-time monotonicity). Empty on a sound run;
    /// the CLI maps a non-empty list to exit code 2.
    std::vector<std::string> invariant_violations;
    std::vector<Alarm> alarms;
    /// Final public log in the text export format.
    std::string log_export;
};

RunResult run_scenario(const ScenarioConfig& config);

} // namespace spacehsm

#endif
