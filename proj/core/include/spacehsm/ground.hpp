// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_GROUND_HPP
#define SPACEHSM_GROUND_HPP

/// \file
/// Terrestrial side of the transparency protocol: the public certificate
/// log, the monitor comparing beacon roots against it, the consensus
/// bootstrap that establishes which satellite key to trust, and the offline
/// vault used to re-synchronize the channel key after a compromise.
///
/// Log sequencing: submissions carry the leaf index the device assigned, and
/// the log appends strictly in index order, buffering out-of-order arrivals.
/// The log's Merkle tree therefore orders certificates exactly as the
/// device's accumulator does, which is what makes root comparison
/// meaningful. One log exists per channel-key epoch; when a new epoch
/// appears, earlier logs freeze and are never extended again.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spacehsm/accumulator.hpp"
#include "spacehsm/messages.hpp"
#include "spacehsm/ratchet.hpp"
#include "spacehsm/signature.hpp"

namespace spacehsm {

enum class SubmitResult : uint8_t {
    Appended = 0,      // entered the Merkle log (possibly flushing buffered successors)
    Buffered = 1,      // waiting for a lower leaf index to arrive
    Duplicate = 2,     // identical bytes already held
    Frozen = 3,        // epoch log no longer extended
    Mismatch = 4,      // different content already held at that index
    BadSignature = 5,  // device signature invalid
};

/// One epoch's append-only certificate log.
class CertificateLog {
public:
    explicit CertificateLog(uint64_t epoch) : epoch_(epoch) {}

    struct SubmitOutcome {
        SubmitResult status = SubmitResult::Mismatch;
        /// Leaf indices appended by this call, in append order.
        std::vector<uint64_t> appended;
    };

    /// Sequenced insert; cert.signer_epoch must equal this log's epoch.
    SubmitOutcome submit(const SignedCertificate& cert);

    uint64_t epoch() const { return epoch_; }
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    const MerkleLog& merkle() const { return merkle_; }
    uint64_t size() const { return merkle_.size(); }
    size_t buffered_count() const { return buffered_.size(); }

    /// Throws std::out_of_range past the end.
    const SignedCertificate& entry(uint64_t leaf_index) const;

private:
    uint64_t epoch_;
    bool frozen_ = false;
    MerkleLog merkle_;
    std::vector<SignedCertificate> entries_;
    std::map<uint64_t, SignedCertificate> buffered_;
};

/// The public log across all epochs, plus the trusted device identity.
class LogServer {
public:
    /// Trust anchor from the consensus bootstrap. Submissions verify device
    /// signatures once this is set.
    void set_identity(SignatureScheme scheme, Bytes public_key);
    bool has_identity() const { return !hsm_key_.empty(); }
    SignatureScheme scheme() const { return scheme_; }
    const Bytes& hsm_key() const { return hsm_key_; }

    /// Makes `epoch` the active log (created empty if new) and freezes all
    /// lower epochs. Returns the epochs frozen by this call.
    std::vector<uint64_t> observe_epoch(uint64_t epoch);

    /// Routes by signer_epoch; a higher epoch than any seen activates it.
    CertificateLog::SubmitOutcome submit(const SignedCertificate& cert);

    const CertificateLog* log_for(uint64_t epoch) const;
    uint64_t active_epoch() const { return active_epoch_; }
    const std::map<uint64_t, CertificateLog>& logs() const { return logs_; }
    uint64_t total_logged() const;
    uint64_t total_buffered() const;

    /// Text export: header line naming the scheme and base64 device key,
    /// then one "<epoch> <leaf_index> <base64 certificate>" line per logged
    /// entry in (epoch, index) order.
    std::string export_text() const;
    static std::optional<LogServer> import_text(std::string_view text);

private:
    std::map<uint64_t, CertificateLog> logs_;
    uint64_t active_epoch_ = 0;
    bool epoch_seen_ = false;
    SignatureScheme scheme_ = SignatureScheme::Ed25519Pad256;
    Bytes hsm_key_;
};

enum class VerifyStatus : uint8_t {
    Ok = 0,
    BadSignature = 1,
    UnknownEpoch = 2,
    NotLogged = 3,
    ContentMismatch = 4,
    ProofInvalid = 5,
};

std::string verify_status_name(VerifyStatus status);

/// Full certificate check against the public log: device signature, presence
/// at the claimed (epoch, leaf_index), byte-exact content, and an inclusion
/// proof against the epoch log's root.
VerifyStatus verify_certificate(const SignedCertificate& cert,
                                const LogServer& server);

struct BeaconObservation {
    uint64_t t_us = 0;
    std::string via_station;
    BeaconMessage beacon;
};

struct ConsensusResult {
    bool decided = false;
    bool conflict = false;
    SignatureScheme scheme = SignatureScheme::Ed25519Pad256;
    Bytes public_key;
};

/// Initial trust: adopt the key whose self-consistent beacons were relayed
/// by at least `threshold` distinct stations. Two keys reaching threshold is
/// a conflict and nothing is adopted.
ConsensusResult consensus_bootstrap(const std::vector<BeaconObservation>& observations,
                                    uint32_t threshold);

enum class AlarmKind : uint8_t { Mismatch = 0, EpochSkew = 1, Spoof = 2 };

std::string alarm_kind_name(AlarmKind kind);

struct Alarm {
    AlarmKind kind = AlarmKind::Mismatch;
    uint64_t t_us = 0;
    uint64_t epoch = 0;
    uint64_t beacon_sequence = 0;
    std::string reason;
};

struct MonitorConfig {
    /// Tolerance for beacons observed shortly after an epoch transition that
    /// were signed before it.
    uint64_t grace_window_us = 60'000'000;
    /// Time the log is given to catch up to a beacon's committed size before
    /// the gap is evaluated; covers submission latency, not retransmission
    /// (outstanding radio retries are covered by claims instead).
    uint64_t in_flight_grace_us = 10'000'000;
    /// Maps (start, grace) to the deadline for a pending catch-up check;
    /// defaults to plain addition.
    std::function<uint64_t(uint64_t, uint64_t)> visible_deadline_fn;
};

/// Compares every trusted beacon against the public log. Alarms are
/// deduplicated per (kind, epoch): the interesting fact is that an epoch is
/// compromised, not how many beacons repeat the evidence.
///
/// Claims: a ground station registers a claim (by request id) while it has a
/// certificate request outstanding — from first transmission until it has
/// seen every resulting certificate confirmed in the log, or gives up. A
/// beacon committing to more certificates than the log holds is treated as
/// suppression only when the gap exceeds the number of active claims: if
/// honest stations own enough in-flight requests to explain the gap, the
/// monitor waits. A forged certificate has no claimant, so its gap alarms as
/// soon as the grace expires; a station abandoning publication releases its
/// claim, exposing the gap. Claims can only delay detection while honest
/// requests are genuinely outstanding, never prevent it.
class Monitor {
public:
    explicit Monitor(MonitorConfig config);

    void set_identity(SignatureScheme scheme, Bytes public_key);
    bool online() const { return online_; }

    void add_claim(const std::array<uint8_t, 16>& request_id);
    void remove_claim(const std::array<uint8_t, 16>& request_id);
    size_t active_claims() const { return claims_.size(); }

    std::vector<Alarm> observe_beacon(uint64_t t_us, const BeaconObservation& obs,
                                      const LogServer& server);

    /// Processes catch-up checks that have come due.
    std::vector<Alarm> poll(uint64_t t_us, const LogServer& server);
    std::optional<uint64_t> next_check_due() const;

    uint64_t expected_epoch() const { return expected_epoch_; }
    uint64_t epoch_transitions() const { return transitions_; }
    uint64_t beacons_processed() const { return beacons_processed_; }

private:
    struct PendingCheck {
        uint64_t due_us = 0;
        uint64_t observed_us = 0;
        BeaconMessage beacon;
    };

    bool already_alarmed(AlarmKind kind, uint64_t epoch) const;
    void mark_alarmed(AlarmKind kind, uint64_t epoch);
    std::vector<Alarm> check_root(uint64_t t_us, const BeaconMessage& beacon,
                                  const LogServer& server);

    MonitorConfig config_;
    bool online_ = false;
    SignatureScheme scheme_ = SignatureScheme::Ed25519Pad256;
    Bytes trusted_key_;
    uint64_t expected_epoch_ = 0;
    uint64_t last_transition_us_ = 0;
    uint64_t transitions_ = 0;
    uint64_t beacons_processed_ = 0;
    std::set<std::pair<uint64_t, uint64_t>> seen_beacons_; // (epoch, sequence)
    std::map<uint64_t, PendingCheck> pending_;             // epoch → earliest gap
    std::set<std::pair<uint8_t, uint64_t>> alarmed_;       // (kind, epoch)
    std::set<std::array<uint8_t, 16>> claims_;             // outstanding requests
};

/// Offline mirror of the channel-key PRG, fetched during a reset.
struct OfflineVault {
    PrgState snapshot;
};

/// Fast-forwards the vault snapshot. Throws std::invalid_argument if the
/// epoch predates the snapshot.
PrgState vault_state_for_epoch(const OfflineVault& vault, uint64_t epoch);
ChannelKey vault_key_for_epoch(const OfflineVault& vault, uint64_t epoch);

} // namespace spacehsm

#endif
