// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/ground.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace spacehsm {

CertificateLog::SubmitOutcome CertificateLog::submit(const SignedCertificate& cert) {
    if (cert.signer_epoch != epoch_) {
        throw std::invalid_argument("CertificateLog: certificate routed to wrong epoch");
    }
    SubmitOutcome outcome;
    if (frozen_) {
        outcome.status = SubmitResult::Frozen;
        return outcome;
    }
    const uint64_t index = cert.leaf_index;
    const Bytes bytes = cert.encode();

    if (index < merkle_.size()) {
        outcome.status = merkle_.leaf(index) == bytes ? SubmitResult::Duplicate
                                                      : SubmitResult::Mismatch;
        return outcome;
    }
    if (auto it = buffered_.find(index); it != buffered_.end()) {
        outcome.status = it->second.encode() == bytes ? SubmitResult::Duplicate
                                                      : SubmitResult::Mismatch;
        return outcome;
    }
    if (index > merkle_.size()) {
        buffered_.emplace(index, cert);
        outcome.status = SubmitResult::Buffered;
        return outcome;
    }

    merkle_.append(bytes);
    entries_.push_back(cert);
    outcome.appended.push_back(index);
    while (true) {
        auto it = buffered_.find(merkle_.size());
        if (it == buffered_.end()) break;
        merkle_.append(it->second.encode());
        entries_.push_back(it->second);
        outcome.appended.push_back(it->first);
        buffered_.erase(it);
    }
    outcome.status = SubmitResult::Appended;
    return outcome;
}

const SignedCertificate& CertificateLog::entry(uint64_t leaf_index) const {
    if (leaf_index >= entries_.size()) {
        throw std::out_of_range("CertificateLog: entry index past the end");
    }
    return entries_[static_cast<size_t>(leaf_index)];
}

void LogServer::set_identity(SignatureScheme scheme, Bytes public_key) {
    scheme_ = scheme;
    hsm_key_ = std::move(public_key);
}

std::vector<uint64_t> LogServer::observe_epoch(uint64_t epoch) {
    std::vector<uint64_t> frozen;
    if (epoch_seen_ && epoch <= active_epoch_) {
        logs_.try_emplace(epoch, epoch);
        return frozen;
    }
    for (auto& [e, log] : logs_) {
        if (e < epoch && !log.frozen()) {
            log.freeze();
            frozen.push_back(e);
        }
    }
    logs_.try_emplace(epoch, epoch);
    active_epoch_ = epoch;
    epoch_seen_ = true;
    return frozen;
}

CertificateLog::SubmitOutcome LogServer::submit(const SignedCertificate& cert) {
    if (has_identity()) {
        Bytes payload = cert_signed_payload(cert.signer_epoch, cert.leaf_index,
                                            cert.csr.encode());
        if (!verify(scheme_, hsm_key_, payload, cert.signature)) {
            return {SubmitResult::BadSignature, {}};
        }
    }
    const uint64_t epoch = cert.signer_epoch;
    if (!epoch_seen_ || epoch > active_epoch_) {
        observe_epoch(epoch);
    }
    auto it = logs_.find(epoch);
    if (it == logs_.end()) {
        // An epoch below the active one that never had a log: superseded.
        return {SubmitResult::Frozen, {}};
    }
    return it->second.submit(cert);
}

const CertificateLog* LogServer::log_for(uint64_t epoch) const {
    auto it = logs_.find(epoch);
    return it == logs_.end() ? nullptr : &it->second;
}

uint64_t LogServer::total_logged() const {
    uint64_t total = 0;
    for (const auto& [epoch, log] : logs_) total += log.size();
    return total;
}

uint64_t LogServer::total_buffered() const {
    uint64_t total = 0;
    for (const auto& [epoch, log] : logs_) total += log.buffered_count();
    return total;
}

std::string LogServer::export_text() const {
    std::string out = "# spacehsm-log-export v1 scheme=" + scheme_name(scheme_) +
                      " hsm_key=" + base64_encode(hsm_key_) + "\n";
    for (const auto& [epoch, log] : logs_) {
        for (uint64_t i = 0; i < log.size(); ++i) {
            out += std::to_string(epoch);
            out += ' ';
            out += std::to_string(i);
            out += ' ';
            out += base64_encode(log.entry(i).encode());
            out += '\n';
        }
    }
    return out;
}

std::optional<LogServer> LogServer::import_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    const std::string prefix = "# spacehsm-log-export v1 ";
    if (line.rfind(prefix, 0) != 0) return std::nullopt;

    std::istringstream header(line.substr(prefix.size()));
    std::optional<SignatureScheme> scheme;
    std::optional<Bytes> key;
    std::string token;
    while (header >> token) {
        if (token.rfind("scheme=", 0) == 0) {
            scheme = scheme_from_name(token.substr(7));
            if (!scheme) return std::nullopt;
        } else if (token.rfind("hsm_key=", 0) == 0) {
            key = base64_decode(token.substr(8));
            if (!key) return std::nullopt;
        } else {
            return std::nullopt;
        }
    }
    if (!scheme || !key) return std::nullopt;

    LogServer server;
    server.set_identity(*scheme, std::move(*key));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        uint64_t epoch = 0;
        uint64_t index = 0;
        std::string b64;
        if (!(fields >> epoch >> index >> b64)) return std::nullopt;
        std::string extra;
        if (fields >> extra) return std::nullopt;
        auto bytes = base64_decode(b64);
        if (!bytes) return std::nullopt;
        auto cert = SignedCertificate::decode(*bytes);
        if (!cert) return std::nullopt;
        if (cert->signer_epoch != epoch || cert->leaf_index != index) {
            return std::nullopt;
        }
        auto outcome = server.submit(*cert);
        if (outcome.status != SubmitResult::Appended) return std::nullopt;
    }
    if (server.total_buffered() != 0) return std::nullopt;
    return server;
}

std::string verify_status_name(VerifyStatus status) {
    switch (status) {
        case VerifyStatus::Ok: return "ok";
        case VerifyStatus::BadSignature: return "bad_signature";
        case VerifyStatus::UnknownEpoch: return "unknown_epoch";
        case VerifyStatus::NotLogged: return "not_logged";
        case VerifyStatus::ContentMismatch: return "content_mismatch";
        case VerifyStatus::ProofInvalid: return "proof_invalid";
    }
    return "unknown";
}

VerifyStatus verify_certificate(const SignedCertificate& cert,
                                const LogServer& server) {
    Bytes payload = cert_signed_payload(cert.signer_epoch, cert.leaf_index,
                                        cert.csr.encode());
    if (!verify(server.scheme(), server.hsm_key(), payload, cert.signature)) {
        return VerifyStatus::BadSignature;
    }
    const CertificateLog* log = server.log_for(cert.signer_epoch);
    if (!log) return VerifyStatus::UnknownEpoch;
    if (cert.leaf_index >= log->size()) return VerifyStatus::NotLogged;
    const Bytes bytes = cert.encode();
    if (log->merkle().leaf(cert.leaf_index) != bytes) {
        return VerifyStatus::ContentMismatch;
    }
    auto proof = log->merkle().prove_inclusion(cert.leaf_index);
    if (!verify_inclusion(log->merkle().root(), bytes, proof)) {
        return VerifyStatus::ProofInvalid;
    }
    return VerifyStatus::Ok;
}

ConsensusResult consensus_bootstrap(const std::vector<BeaconObservation>& observations,
                                    uint32_t threshold) {
    if (threshold == 0) threshold = 1;
    std::map<std::pair<uint16_t, Bytes>, std::set<std::string>> stations_by_key;
    for (const auto& obs : observations) {
        if (!obs.beacon.verify_signature()) continue; // not even self-consistent
        auto key = std::make_pair(static_cast<uint16_t>(obs.beacon.scheme),
                                  obs.beacon.public_key);
        stations_by_key[key].insert(obs.via_station);
    }
    ConsensusResult result;
    for (const auto& [key, stations] : stations_by_key) {
        if (stations.size() < threshold) continue;
        if (result.decided) {
            result.conflict = true;
            result.decided = false;
            result.public_key.clear();
            return result;
        }
        result.decided = true;
        result.scheme = static_cast<SignatureScheme>(key.first);
        result.public_key = key.second;
    }
    return result;
}

std::string alarm_kind_name(AlarmKind kind) {
    switch (kind) {
        case AlarmKind::Mismatch: return "mismatch";
        case AlarmKind::EpochSkew: return "epoch_skew";
        case AlarmKind::Spoof: return "spoof";
    }
    return "unknown";
}

Monitor::Monitor(MonitorConfig config) : config_(std::move(config)) {
    if (!config_.visible_deadline_fn) {
        config_.visible_deadline_fn = [](uint64_t start, uint64_t grace) {
            return start + grace;
        };
    }
}

void Monitor::set_identity(SignatureScheme scheme, Bytes public_key) {
    scheme_ = scheme;
    trusted_key_ = std::move(public_key);
    online_ = true;
}

void Monitor::add_claim(const std::array<uint8_t, 16>& request_id) {
    claims_.insert(request_id);
}

void Monitor::remove_claim(const std::array<uint8_t, 16>& request_id) {
    claims_.erase(request_id);
}

bool Monitor::already_alarmed(AlarmKind kind, uint64_t epoch) const {
    return alarmed_.contains({static_cast<uint8_t>(kind), epoch});
}

void Monitor::mark_alarmed(AlarmKind kind, uint64_t epoch) {
    alarmed_.insert({static_cast<uint8_t>(kind), epoch});
}

std::vector<Alarm> Monitor::observe_beacon(uint64_t t_us,
                                           const BeaconObservation& obs,
                                           const LogServer& server) {
    std::vector<Alarm> alarms;
    if (!online_) return alarms;
    const BeaconMessage& beacon = obs.beacon;

    const bool trusted = beacon.scheme == scheme_ &&
                         beacon.public_key == trusted_key_ &&
                         beacon.verify_signature();
    if (!trusted) {
        if (!already_alarmed(AlarmKind::Spoof, beacon.epoch)) {
            mark_alarmed(AlarmKind::Spoof, beacon.epoch);
            alarms.push_back(Alarm{AlarmKind::Spoof, t_us, beacon.epoch,
                                   beacon.sequence,
                                   "beacon not signed by the trusted key"});
        }
        return alarms;
    }

    if (!seen_beacons_.insert({beacon.epoch, beacon.sequence}).second) {
        return alarms; // same beacon relayed by another station
    }
    ++beacons_processed_;

    if (beacon.epoch > expected_epoch_) {
        expected_epoch_ = beacon.epoch;
        ++transitions_;
        last_transition_us_ = t_us;
        // A frozen log is expected to stay short of its last beacons; the
        // compromise has already been acted on.
        std::erase_if(pending_,
                      [&](const auto& kv) { return kv.first < beacon.epoch; });
    } else if (beacon.epoch < expected_epoch_) {
        if (t_us - last_transition_us_ > config_.grace_window_us &&
            !already_alarmed(AlarmKind::EpochSkew, beacon.epoch)) {
            mark_alarmed(AlarmKind::EpochSkew, beacon.epoch);
            alarms.push_back(Alarm{AlarmKind::EpochSkew, t_us, beacon.epoch,
                                   beacon.sequence,
                                   "beacon from a superseded epoch"});
        }
        return alarms;
    }

    auto root_alarms = check_root(t_us, beacon, server);
    alarms.insert(alarms.end(), root_alarms.begin(), root_alarms.end());
    return alarms;
}

std::vector<Alarm> Monitor::check_root(uint64_t t_us, const BeaconMessage& beacon,
                                       const LogServer& server) {
    std::vector<Alarm> alarms;
    const CertificateLog* log = server.log_for(beacon.epoch);
    const uint64_t log_size = log ? log->size() : 0;

    if (beacon.log_size == log_size) {
        Digest root = log ? log->merkle().root() : empty_root();
        if (root != beacon.accumulator_root &&
            !already_alarmed(AlarmKind::Mismatch, beacon.epoch)) {
            mark_alarmed(AlarmKind::Mismatch, beacon.epoch);
            alarms.push_back(Alarm{AlarmKind::Mismatch, t_us, beacon.epoch,
                                   beacon.sequence,
                                   "accumulator root diverges from log at equal size"});
        }
    } else if (beacon.log_size < log_size) {
        // Stale beacon: it must commit to a prefix of today's log.
        Digest prefix = beacon.log_size == 0
                            ? empty_root()
                            : log->merkle().prefix_root(beacon.log_size);
        if (prefix != beacon.accumulator_root &&
            !already_alarmed(AlarmKind::Mismatch, beacon.epoch)) {
            mark_alarmed(AlarmKind::Mismatch, beacon.epoch);
            alarms.push_back(Alarm{AlarmKind::Mismatch, t_us, beacon.epoch,
                                   beacon.sequence,
                                   "beacon root is not a prefix of the log"});
        }
    } else if (!pending_.contains(beacon.epoch)) {
        // Log behind the beacon: give in-flight submissions their grace.
        // Keeping the earliest such beacon attributes an eventual alarm to
        // the first beacon that exposed the gap.
        PendingCheck check;
        check.due_us = config_.visible_deadline_fn(t_us, config_.in_flight_grace_us);
        check.observed_us = t_us;
        check.beacon = beacon;
        pending_.emplace(beacon.epoch, std::move(check));
    }
    return alarms;
}

std::vector<Alarm> Monitor::poll(uint64_t t_us, const LogServer& server) {
    std::vector<Alarm> alarms;
    for (auto it = pending_.begin(); it != pending_.end();) {
        const uint64_t epoch = it->first;
        const BeaconMessage& beacon = it->second.beacon;
        const CertificateLog* log = server.log_for(epoch);
        const uint64_t log_size = log ? log->size() : 0;

        if (log_size >= beacon.log_size) {
            Digest prefix = log->merkle().prefix_root(beacon.log_size);
            if (prefix != beacon.accumulator_root &&
                !already_alarmed(AlarmKind::Mismatch, epoch)) {
                mark_alarmed(AlarmKind::Mismatch, epoch);
                alarms.push_back(Alarm{AlarmKind::Mismatch, t_us, epoch,
                                       beacon.sequence,
                                       "log caught up but roots diverge"});
            }
            it = pending_.erase(it);
        } else if (it->second.due_us <= t_us &&
                   beacon.log_size - log_size > claims_.size()) {
            // More certificates are missing than honest stations have
            // outstanding: somebody signed without publishing.
            if (!already_alarmed(AlarmKind::Mismatch, epoch)) {
                mark_alarmed(AlarmKind::Mismatch, epoch);
                alarms.push_back(Alarm{AlarmKind::Mismatch, t_us, epoch,
                                       beacon.sequence,
                                       "log missing certificates committed by beacon"});
            }
            it = pending_.erase(it);
        } else {
            // Covered by outstanding claims (or not yet due): keep the check
            // alive and re-evaluate when claims or the log change.
            ++it;
        }
    }
    return alarms;
}

std::optional<uint64_t> Monitor::next_check_due() const {
    std::optional<uint64_t> due;
    for (const auto& [epoch, check] : pending_) {
        if (!due || check.due_us < *due) due = check.due_us;
    }
    return due;
}

PrgState vault_state_for_epoch(const OfflineVault& vault, uint64_t epoch) {
    if (epoch < vault.snapshot.counter) {
        throw std::invalid_argument("vault_state_for_epoch: epoch predates snapshot");
    }
    PrgState state = vault.snapshot;
    while (state.counter < epoch) state = derive_key(state).second;
    return state;
}

ChannelKey vault_key_for_epoch(const OfflineVault& vault, uint64_t epoch) {
    return derive_key(vault_state_for_epoch(vault, epoch)).first;
}

} // namespace spacehsm
