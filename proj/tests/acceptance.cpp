// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per shipped guarantee, tolerances
// pinned in code. Exit 0 iff every criterion passes.
//
// Usage: spacehsm_acceptance [scenarios-dir]

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spacehsm/accumulator.hpp"
#include "spacehsm/ax25.hpp"
#include "spacehsm/engine.hpp"
#include "spacehsm/ground.hpp"
#include "spacehsm/hash.hpp"
#include "spacehsm/hsm.hpp"
#include "spacehsm/link.hpp"
#include "spacehsm/power.hpp"
#include "spacehsm/ratchet.hpp"
#include "spacehsm/scenario.hpp"

using namespace spacehsm;

namespace {

std::string g_scenarios_dir = "scenarios";

std::string fail(const std::string& reason) { return reason; }

/// Empty string means pass; otherwise the failure reason.
using CriterionBody = std::function<std::string()>;

bool run_criterion(int number, const std::string& label,
                   const CriterionBody& body) {
    auto started = std::chrono::steady_clock::now();
    std::string reason;
    try {
        reason = body();
    } catch (const std::exception& e) {
        reason = std::string("unexpected exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    if (reason.empty()) {
        std::printf("PASS  %d %-28s (%.2fs)\n", number, label.c_str(), elapsed);
        return true;
    }
    std::printf("FAIL  %d %-28s %s (%.2fs)\n", number, label.c_str(),
                reason.c_str(), elapsed);
    return false;
}

Bytes patterned(size_t n) {
    Bytes out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i] = static_cast<uint8_t>((i * 131 + 7) & 0xFF);
    }
    return out;
}

ScenarioConfig load_scenario(const std::string& name) {
    std::ifstream in(g_scenarios_dir + "/" + name);
    if (!in) throw std::runtime_error("cannot open scenario " + name);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::pair<Hsm, BeaconMessage> fresh_device(uint8_t salt) {
    Bytes seed = {salt, 0x5a};
    Digest entropy = sha256(BytesView(seed.data(), seed.size()));
    Bytes rseed = {salt, 0xa5};
    PrgState ratchet = PrgState::from_seed(sha256(BytesView(rseed.data(), rseed.size())));
    return Hsm::bootstrap(BytesView(entropy.bytes.data(), entropy.bytes.size()),
                          ratchet, HsmConfig{});
}

CsrMessage csr_numbered(uint32_t n, uint32_t subject_bytes = 48) {
    CsrMessage csr;
    csr.subject.assign(subject_bytes, static_cast<uint8_t>(n & 0xFF));
    for (size_t i = 0; i < csr.request_id.size(); ++i) {
        csr.request_id[i] = static_cast<uint8_t>((n >> ((i % 4) * 8)) ^ i);
    }
    csr.timestamp_us = n;
    return csr;
}

// --- criterion 1: fragmentation ---------------------------------------------

std::string criterion_fragmentation() {
    const Callsign dest{"SPHSM1", 0};
    const Callsign src{"GND1", 0};

    // A default-size certificate request in its sealed envelope.
    Bytes envelope = patterned(kDefaultCsrSize + kAeadOverhead);
    auto frames = fragment(dest, src, 7, MessageKind::Request,
                           BytesView(envelope.data(), envelope.size()));
    if (frames.size() != 11) {
        return fail("expected 11 frames for a 2588-byte envelope, got " +
                    std::to_string(frames.size()));
    }
    for (size_t i = 0; i + 1 < frames.size(); ++i) {
        if (frames[i].encoded_size() != 291) {
            return fail("full frame " + std::to_string(i) + " encodes to " +
                        std::to_string(frames[i].encoded_size()) +
                        " bytes, expected 291");
        }
    }
    if (frames.back().encoded_size() != 118) {
        return fail("final frame encodes to " +
                    std::to_string(frames.back().encoded_size()) +
                    " bytes, expected 118");
    }
    auto back = reassemble(frames);
    if (!back || back->payload != envelope) {
        return fail("2588-byte round-trip failed");
    }

    // Exhaustive round-trip across every payload size up to 2048 bytes,
    // with every frame surviving an encode/decode cycle.
    for (size_t n = 0; n <= 2048; ++n) {
        Bytes payload = patterned(n);
        auto fs = fragment(dest, src, static_cast<uint16_t>(n),
                           MessageKind::Response,
                           BytesView(payload.data(), payload.size()));
        size_t expected = n == 0 ? 1 : (n + kMaxFrameData - 1) / kMaxFrameData;
        if (fs.size() != expected) {
            return fail("size " + std::to_string(n) + ": frame count " +
                        std::to_string(fs.size()));
        }
        std::vector<Ax25Frame> wired;
        wired.reserve(fs.size());
        for (const auto& f : fs) {
            Bytes encoded = f.encode();
            auto decoded =
                Ax25Frame::decode(BytesView(encoded.data(), encoded.size()));
            if (!decoded) {
                return fail("size " + std::to_string(n) +
                            ": frame failed decode");
            }
            wired.push_back(*decoded);
        }
        auto out = reassemble(wired);
        if (!out || out->payload != payload) {
            return fail("size " + std::to_string(n) + ": round-trip mismatch");
        }
    }
    return "";
}

// --- criterion 2: airtime and per-pass capacity ------------------------------

std::string criterion_capacity() {
    LinkConfig link;
    uint64_t airtime = request_airtime_us(link, kDefaultCsrSize);
    if (airtime < 20'000'000 || airtime > 22'000'000) {
        return fail("default request airtime " + std::to_string(airtime) +
                    "us outside [20s, 22s]");
    }

    auto started = std::chrono::steady_clock::now();
    ScenarioConfig config = load_scenario("honest_baseline.json");
    RunResult result = run_scenario(config);
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    if (elapsed > 10.0) {
        return fail("honest_baseline took " + std::to_string(elapsed) + "s (>10s)");
    }
    if (!result.invariant_violations.empty()) {
        return fail("invariant violation: " + result.invariant_violations[0]);
    }
    if (result.metrics.requests_failed != 0) {
        return fail(std::to_string(result.metrics.requests_failed) +
                    " requests failed");
    }
    if (result.metrics.requests_completed_per_pass.empty()) {
        return fail("no completions recorded");
    }
    for (uint64_t per_pass : result.metrics.requests_completed_per_pass) {
        if (per_pass < 27 || per_pass > 30) {
            return fail("a 600s pass completed " + std::to_string(per_pass) +
                        " requests, outside [27, 30]");
        }
    }
    uint64_t total = 0;
    for (uint64_t v : result.metrics.requests_completed_per_pass) total += v;
    if (total != result.metrics.requests_completed) {
        return fail("per-pass attribution does not sum to completions");
    }
    return "";
}

// --- criterion 3: power budget -----------------------------------------------

std::string criterion_power() {
    PowerConfig config;

    // Daylight consumption: exactly 1700 mW, i.e. 44.5% of solar input.
    uint32_t daylight_mw = average_consumption_mw(config);
    if (daylight_mw != 1700) {
        return fail("daylight consumption " + std::to_string(daylight_mw) +
                    " mW, expected 1700");
    }
    double ratio = static_cast<double>(daylight_mw) / config.solar_input_mw;
    if (ratio < 0.444 || ratio > 0.446) {
        return fail("consumption/solar ratio " + std::to_string(ratio) +
                    " outside 0.445 +- 0.001");
    }

    // One full eclipse from a full battery drains 0.64 Wh +- 1%.
    BatteryState battery = BatteryState::full(config);
    battery = step(battery, config, config.eclipse_s, false);
    double drained_wh =
        static_cast<double>(config.battery_mws - battery.charge_mws) /
        kMilliwattSecondsPerWh;
    if (drained_wh < 0.64 * 0.99 || drained_wh > 0.64 * 1.01) {
        return fail("eclipse drain " + std::to_string(drained_wh) +
                    " Wh outside 0.64 +- 1%");
    }

    // 50 orbits of the idle system: max depth of discharge 6.375% +- 0.1pp.
    ScenarioConfig scenario;
    scenario.duration_us = uint64_t{50} * 5400 * kMicrosPerSecond;
    RunResult result = run_scenario(scenario);
    if (!result.invariant_violations.empty()) {
        return fail("invariant violation: " + result.invariant_violations[0]);
    }
    if (result.metrics.brownouts != 0) return fail("unexpected brownout");
    double dod = result.metrics.max_dod_percent;
    if (dod < 6.375 - 0.1 || dod > 6.375 + 0.1) {
        return fail("50-orbit max DoD " + std::to_string(dod) +
                    "% outside 6.375 +- 0.1");
    }
    return "";
}

// --- criterion 4: suppression detection --------------------------------------

std::string criterion_detection() {
    // Exhaustive: for every non-empty subset of up to 5 certificates
    // withheld from the log, the first beacon exposing the gap yields
    // exactly one mismatch alarm once the in-flight grace expires.
    for (uint32_t n = 1; n <= 5; ++n) {
        for (uint32_t mask = 1; mask < (1u << n); ++mask) {
            auto [hsm, beacon0] = fresh_device(static_cast<uint8_t>(n));
            LogServer server;
            server.set_identity(hsm.scheme(), hsm.public_key());
            MonitorConfig mc;
            Monitor monitor{mc};
            monitor.set_identity(hsm.scheme(), hsm.public_key());

            std::vector<SignedCertificate> certs;
            for (uint32_t i = 0; i < n; ++i) {
                SignResult r = hsm.sign_certificate(csr_numbered(n * 100 + i));
                if (r.status != SignStatus::Ok) return fail("sign failed");
                certs.push_back(*r.certificate);
            }
            for (uint32_t i = 0; i < n; ++i) {
                if (mask & (1u << i)) continue; // withheld
                SubmitResult st = server.submit(certs[i]).status;
                if (st != SubmitResult::Appended && st != SubmitResult::Buffered) {
                    return fail("unexpected submit status");
                }
            }

            BeaconMessage beacon = hsm.make_beacon();
            uint64_t t0 = 1000;
            auto immediate =
                monitor.observe_beacon(t0, {t0, "GND1", beacon}, server);
            std::vector<Alarm> alarms = immediate;
            uint64_t due = t0 + mc.in_flight_grace_us;
            auto later = monitor.poll(due, server);
            alarms.insert(alarms.end(), later.begin(), later.end());

            if (alarms.size() != 1 || alarms[0].kind != AlarmKind::Mismatch) {
                return fail("subset n=" + std::to_string(n) + " mask=" +
                            std::to_string(mask) + ": got " +
                            std::to_string(alarms.size()) +
                            " alarms, expected exactly 1 mismatch");
            }
            if (alarms[0].beacon_sequence != beacon.sequence) {
                return fail("alarm not attributed to the exposing beacon");
            }

            // Subsequent beacons repeating the evidence must not re-alarm.
            BeaconMessage beacon2 = hsm.make_beacon();
            uint64_t t1 = due + 60'000'000;
            auto repeat =
                monitor.observe_beacon(t1, {t1, "GND1", beacon2}, server);
            auto repeat_poll = monitor.poll(t1 + mc.in_flight_grace_us, server);
            if (!repeat.empty() || !repeat_poll.empty()) {
                return fail("duplicate alarm for the same epoch");
            }
        }
    }

    // No false alarms: 100 seeds of an honest lossy, faulty run.
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        ScenarioConfig config;
        config.seed = seed;
        config.duration_us = uint64_t{5400} * kMicrosPerSecond;
        config.link.loss_probability = 0.02;
        config.hsm.fault_rate = 0.2;
        for (int i = 0; i < 3; ++i) {
            WorkloadRequest r;
            r.id = "r" + std::to_string(i);
            r.station = "GND1";
            config.workload.push_back(r);
        }
        RunResult result = run_scenario(config);
        if (!result.alarms.empty()) {
            return fail("seed " + std::to_string(seed) + ": false alarm '" +
                        result.alarms[0].reason + "'");
        }
        if (!result.invariant_violations.empty()) {
            return fail("seed " + std::to_string(seed) + ": " +
                        result.invariant_violations[0]);
        }
        if (result.metrics.requests_completed != 3) {
            return fail("seed " + std::to_string(seed) + ": only " +
                        std::to_string(result.metrics.requests_completed) +
                        "/3 requests completed");
        }
    }
    return "";
}

// --- criterion 5: key theft and reset ----------------------------------------

std::string criterion_reset() {
    ScenarioConfig config = load_scenario("key_theft_reset.json");
    RunResult result = run_scenario(config);
    if (!result.invariant_violations.empty()) {
        return fail("invariant violation: " + result.invariant_violations[0]);
    }
    const Metrics& m = result.metrics;
    if (m.resets != 1) {
        return fail("expected 1 reset, got " + std::to_string(m.resets));
    }
    if (m.epoch_transitions != 1) {
        return fail("expected 1 epoch transition, got " +
                    std::to_string(m.epoch_transitions));
    }
    if (m.alarms_mismatch != 1) {
        return fail("expected 1 mismatch alarm, got " +
                    std::to_string(m.alarms_mismatch));
    }
    if (m.requests_failed != 0 || m.requests_completed == 0) {
        return fail("post-reset requests did not complete");
    }

    // Epoch 0's log froze; epoch 1's log opened; every certificate in both
    // logs (pre- and post-reset) verifies with an inclusion proof.
    auto imported = LogServer::import_text(result.log_export);
    if (!imported) return fail("log export failed to re-import");
    const CertificateLog* old_log = imported->log_for(0);
    const CertificateLog* new_log = imported->log_for(1);
    if (!old_log || !old_log->frozen()) return fail("epoch 0 log not frozen");
    if (!new_log || new_log->frozen()) return fail("epoch 1 log not active");
    if (old_log->size() == 0 || new_log->size() == 0) {
        return fail("expected certificates on both sides of the reset");
    }
    for (const auto& [epoch, log] : imported->logs()) {
        for (uint64_t i = 0; i < log.size(); ++i) {
            if (verify_certificate(log.entry(i), *imported) != VerifyStatus::Ok) {
                return fail("certificate " + std::to_string(epoch) + "/" +
                            std::to_string(i) + " failed verification");
            }
        }
    }

    // The device accepted the post-reset key on first contact: exactly one
    // epoch_transition event, before the post-reset completions.
    size_t transitions = 0;
    for (const std::string& line : result.events) {
        transitions += line.find("\"kind\":\"epoch_transition\"") != std::string::npos;
    }
    if (transitions != 1) {
        return fail("expected one epoch_transition event, saw " +
                    std::to_string(transitions));
    }
    return "";
}

// --- criterion 6: fault storm ------------------------------------------------

std::string criterion_faults() {
    HsmConfig hc;
    hc.fault_rate = 0.5;
    hc.retry_limit = 3;
    Bytes seed = {0x21, 0x12};
    Digest entropy = sha256(BytesView(seed.data(), seed.size()));
    PrgState ratchet = PrgState::from_seed(sha256(BytesView()));
    auto [hsm, beacon] = Hsm::bootstrap(
        BytesView(entropy.bytes.data(), entropy.bytes.size()), ratchet, hc);

    const uint32_t kAttempts = 10'000;
    uint64_t released = 0, exhausted = 0;
    for (uint32_t i = 0; i < kAttempts; ++i) {
        SignResult r = hsm.sign_certificate(csr_numbered(i, 40));
        if (r.status == SignStatus::Ok) {
            const SignedCertificate& cert = *r.certificate;
            Bytes payload = cert_signed_payload(cert.signer_epoch,
                                                cert.leaf_index,
                                                cert.csr.encode());
            if (!verify(hsm.scheme(), hsm.public_key(), payload,
                        cert.signature)) {
                return fail("released certificate " + std::to_string(i) +
                            " carries an invalid signature");
            }
            ++released;
        } else {
            ++exhausted;
        }
    }
    if (released + exhausted != kAttempts) return fail("attempt accounting broken");
    if (hsm.accumulator().size() != released) {
        return fail("accumulator holds " +
                    std::to_string(hsm.accumulator().size()) +
                    " entries, released " + std::to_string(released));
    }
    if (hsm.faults_detected_total() < kAttempts / 4) {
        return fail("implausibly few faults detected: " +
                    std::to_string(hsm.faults_detected_total()));
    }
    if (exhausted == 0) {
        return fail("expected some exhausted requests at fault rate 0.5");
    }
    return "";
}

// --- criterion 7: accumulator against brute force -----------------------------

Digest reference_root(const std::vector<Bytes>& leaves, size_t lo, size_t hi) {
    if (hi == lo) return empty_root();
    if (hi - lo == 1) {
        return leaf_hash(BytesView(leaves[lo].data(), leaves[lo].size()));
    }
    size_t size = hi - lo;
    size_t split = 1;
    while (split * 2 < size) split *= 2;
    return node_hash(reference_root(leaves, lo, lo + split),
                     reference_root(leaves, lo + split, hi));
}

std::string criterion_accumulator() {
    std::vector<Bytes> leaves;
    MerkleLog log;
    for (size_t n = 0; n <= 64; ++n) {
        Digest expected = reference_root(leaves, 0, leaves.size());
        if (log.root() != expected) {
            return fail("root mismatch at size " + std::to_string(n));
        }
        for (uint64_t i = 0; i < log.size(); ++i) {
            InclusionProof proof = log.prove_inclusion(i);
            if (!verify_inclusion(log.root(),
                                  BytesView(leaves[i].data(), leaves[i].size()),
                                  proof)) {
                return fail("inclusion proof " + std::to_string(i) + "/" +
                            std::to_string(n) + " failed");
            }
        }
        if (n == 64) break;
        Bytes leaf = patterned(16 + n);
        leaf.push_back(static_cast<uint8_t>(n));
        leaves.push_back(leaf);
        log.append(leaves.back());
    }

    // Every single-bit corruption of every proof path breaks verification
    // for trees up to 16 leaves.
    MerkleLog small;
    std::vector<Bytes> small_leaves;
    for (size_t n = 1; n <= 16; ++n) {
        Bytes leaf = patterned(8 + n);
        small_leaves.push_back(leaf);
        small.append(leaf);
        for (uint64_t i = 0; i < small.size(); ++i) {
            InclusionProof proof = small.prove_inclusion(i);
            BytesView leaf_bytes(small_leaves[i].data(), small_leaves[i].size());
            for (size_t d = 0; d < proof.path.size(); ++d) {
                for (size_t byte = 0; byte < 32; ++byte) {
                    for (int bit = 0; bit < 8; ++bit) {
                        InclusionProof bad = proof;
                        bad.path[d].bytes[byte] ^=
                            static_cast<uint8_t>(1 << bit);
                        if (verify_inclusion(small.root(), leaf_bytes, bad)) {
                            return fail("corrupted proof accepted at n=" +
                                        std::to_string(n));
                        }
                    }
                }
            }
            Bytes extended = small_leaves[i];
            extended.push_back(0x00);
            if (verify_inclusion(small.root(),
                                 BytesView(extended.data(), extended.size()),
                                 proof)) {
                return fail("extended leaf accepted at n=" + std::to_string(n));
            }
        }
    }
    return "";
}

// --- criterion 8: determinism ------------------------------------------------

std::string criterion_determinism() {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(g_scenarios_dir)) {
        if (entry.path().extension() == ".json") {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) return fail("no scenarios found in " + g_scenarios_dir);

    for (const std::string& name : names) {
        ScenarioConfig config = load_scenario(name);
        RunResult first = run_scenario(config);
        RunResult second = run_scenario(config);
        if (first.events != second.events) {
            return fail(name + ": event streams differ between runs");
        }
        if (first.metrics.to_json() != second.metrics.to_json()) {
            return fail(name + ": metrics differ between runs");
        }
        if (first.log_export != second.log_export) {
            return fail(name + ": log exports differ between runs");
        }
    }
    std::printf("      (verified %zu scenarios twice each)\n", names.size());
    return "";
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_scenarios_dir = argv[1];

    int passed = 0, total = 0;
    auto run = [&](int number, const std::string& label,
                   const CriterionBody& body) {
        ++total;
        passed += run_criterion(number, label, body);
    };

    run(1, "ax25-fragmentation", criterion_fragmentation);
    run(2, "pass-capacity", criterion_capacity);
    run(3, "power-budget", criterion_power);
    run(4, "suppression-detection", criterion_detection);
    run(5, "key-theft-reset", criterion_reset);
    run(6, "fault-storm", criterion_faults);
    run(7, "accumulator-integrity", criterion_accumulator);
    run(8, "determinism", criterion_determinism);

    std::printf("acceptance: %d/%d passed\n", passed, total);
    return passed == total ? 0 : 1;
}
