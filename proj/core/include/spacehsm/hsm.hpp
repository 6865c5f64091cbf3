// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Satellite HSM state machine: holds the signing keypair, the channel-key
// ratchet, and the per-epoch signing accumulator.  Every certificate the HSM
// issues is appended to the accumulator before the response leaves the
// device, so the accumulator root broadcast in the beacon always commits to
// the full signing history of the current epoch.
//
// Epochs: the channel key is derived from a forward-secure PRG state.  When
// the HSM sees traffic it can only decrypt with the *next* key (one-step
// lookahead), it advances permanently: the previous epoch's accumulator is
// archived, a fresh accumulator is started, and the response cache is
// cleared.  Old-epoch traffic is dropped from then on.
//
// Fault protection: the HSM verifies every signature it produces with its own
// public key before release.  A corrupted signing pass (simulated bit flips
// at a configurable rate) is detected internally and retried; a signature
// never leaves the device unverified.

#ifndef SPACEHSM_HSM_HPP
#define SPACEHSM_HSM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "spacehsm/accumulator.hpp"
#include "spacehsm/aead.hpp"
#include "spacehsm/messages.hpp"
#include "spacehsm/ratchet.hpp"
#include "spacehsm/signature.hpp"

namespace spacehsm {

// Deterministic 64-bit generator used for fault draws inside the HSM, kept
// separate from the scenario engine's RNG so fault injection does not perturb
// unrelated random sequences.
struct Splitmix64 {
    uint64_t state = 0;
    uint64_t next();
};

struct HsmConfig {
    SignatureScheme scheme = SignatureScheme::Ed25519Pad256;
    // Probability that a single signing pass is corrupted by a bit flip.
    double fault_rate = 0.0;
    // Additional signing passes attempted after a detected fault.
    uint32_t retry_limit = 3;
};

enum class SignStatus : uint8_t {
    Ok = 0,
    // Every signing attempt (1 + retry_limit) was corrupted and caught by the
    // internal verification; no signature was released.
    FaultExhausted = 1,
};

struct SignResult {
    SignStatus status = SignStatus::Ok;
    // Set when status == Ok.
    std::optional<SignedCertificate> certificate;
    // Number of corrupted signing passes detected (and discarded) internally.
    uint32_t faults_detected = 0;
};

enum class UplinkStatus : uint8_t {
    Ok = 0,
    Duplicate = 1,       // request_id already served this epoch; cached response
    Malformed = 2,       // plaintext did not parse as a certificate request
    FaultExhausted = 3,  // signing failed after all retries
};

struct UplinkResult {
    UplinkStatus status = UplinkStatus::Malformed;
    std::optional<CertResponse> response;
    // Full certificate (response + original request); the accumulator leaf.
    std::optional<SignedCertificate> certificate;
    uint32_t faults_detected = 0;
};

struct EpochArchive {
    uint64_t epoch = 0;
    uint64_t size = 0;
    Digest root;
};

class Hsm {
public:
    // Derives the signing keypair and fault RNG from `entropy`, installs the
    // channel-key ratchet, and returns the state together with the first
    // beacon (sequence 0) announcing the public key and the empty
    // accumulator.
    static std::pair<Hsm, BeaconMessage> bootstrap(BytesView entropy,
                                                   const PrgState& initial_ratchet,
                                                   const HsmConfig& config);

    // --- channel ---

    // Attempts to open an uplink envelope with the current channel key, then
    // with the next key (one-step lookahead).  Success with the next key
    // permanently advances the epoch as a side effect.  Returns the plaintext
    // or nullopt if neither key authenticates the envelope.
    std::optional<Bytes> try_decrypt(BytesView envelope);

    // Seals a downlink payload under the current channel key.  The nonce is
    // drawn from an internal counter, never reused within an epoch.
    Bytes seal(BytesView plaintext);

    // Forces an epoch advance (used by the re-synchronization procedure after
    // key compromise).  Archives the accumulator and clears the response
    // cache, exactly as a lookahead-triggered advance does.
    void advance_epoch();

    // --- signing ---

    // Signs the canonical request bytes, verifying the signature internally
    // before release and retrying on detected corruption.  On success the
    // certificate is appended to the current epoch's accumulator; its
    // leaf_index and signer_epoch fields are filled in by this call.
    SignResult sign_certificate(const CsrMessage& request);

    // Decodes a decrypted uplink payload as a certificate request and signs
    // it.  Repeated request_ids within an epoch return the cached response
    // without signing again, so uplink retransmissions are idempotent.
    UplinkResult process_uplink(BytesView plaintext);

    // Beacon over the current accumulator root; sequence increments per call.
    BeaconMessage make_beacon();

    // Cross-signs a peer device's public key (dual-HSM attestation).
    Attestation attest_peer(BytesView peer_public_key) const;

    // Changes the simulated per-pass corruption probability (radiation
    // environment scripting). The fault RNG stream is unaffected.
    void set_fault_rate(double rate);

    // --- inspection ---

    uint64_t epoch() const { return ratchet_.counter; }
    const ChannelKey& channel_key() const { return key_; }
    const Bytes& public_key() const { return keypair_.public_key; }
    SignatureScheme scheme() const { return config_.scheme; }
    const MerkleLog& accumulator() const { return log_; }
    const std::vector<EpochArchive>& archived_epochs() const { return archives_; }
    // Certificates issued across all epochs (archived + current).
    uint64_t total_signed() const;
    uint64_t beacons_emitted() const { return beacon_sequence_; }
    uint64_t faults_detected_total() const { return faults_total_; }

private:
    Hsm(const HsmConfig& config, KeyPair keypair, const PrgState& ratchet,
        uint64_t fault_seed);

    HsmConfig config_;
    KeyPair keypair_;
    PrgState ratchet_;   // derives the *current* key; counter == epoch
    ChannelKey key_;
    MerkleLog log_;
    std::vector<EpochArchive> archives_;
    std::map<std::array<uint8_t, 16>, CertResponse> response_cache_;
    Splitmix64 fault_rng_;
    uint64_t fault_threshold_ = 0;  // draw < threshold → corrupt this pass
    uint64_t nonce_counter_ = 0;
    uint64_t beacon_sequence_ = 0;
    uint64_t faults_total_ = 0;
};

} // namespace spacehsm

#endif
