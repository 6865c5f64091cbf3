// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/hsm.hpp"

#include <string_view>

namespace spacehsm {

uint64_t Splitmix64::next() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D4ECB9AA9DB7BDULL;
    return z ^ (z >> 31);
}

namespace {

Digest tagged_entropy(BytesView entropy, std::string_view tag) {
    Bytes buf(entropy.begin(), entropy.end());
    for (char c : tag) buf.push_back(static_cast<uint8_t>(c));
    return sha256(buf);
}

// Probability → 64-bit comparison threshold. Computed at 53-bit precision
// and shifted, so a rate of 0.5 maps to exactly 2^63 and rates near 1.0
// cannot overflow.
uint64_t threshold_from_rate(double rate) {
    if (rate <= 0.0) return 0;
    if (rate >= 1.0) return UINT64_MAX;
    return static_cast<uint64_t>(rate * 9007199254740992.0) << 11; // rate * 2^53
}

} // namespace

Hsm::Hsm(const HsmConfig& config, KeyPair keypair, const PrgState& ratchet,
         uint64_t fault_seed)
    : config_(config),
      keypair_(std::move(keypair)),
      ratchet_(ratchet),
      key_(derive_key(ratchet_).first),
      fault_rng_{fault_seed},
      fault_threshold_(threshold_from_rate(config.fault_rate)) {}

std::pair<Hsm, BeaconMessage> Hsm::bootstrap(BytesView entropy,
                                             const PrgState& initial_ratchet,
                                             const HsmConfig& config) {
    Digest sign_seed = tagged_entropy(entropy, "sign");
    Digest fault_digest = tagged_entropy(entropy, "fault");
    uint64_t fault_seed = 0;
    for (int i = 0; i < 8; ++i) {
        fault_seed = (fault_seed << 8) | fault_digest.bytes[static_cast<size_t>(i)];
    }
    KeyPair keypair = KeyPair::generate(config.scheme, sign_seed.view());
    Hsm hsm(config, std::move(keypair), initial_ratchet, fault_seed);
    BeaconMessage first_beacon = hsm.make_beacon();
    return {std::move(hsm), std::move(first_beacon)};
}

std::optional<Bytes> Hsm::try_decrypt(BytesView envelope) {
    if (auto plaintext = aead_open(key_.key, envelope)) return plaintext;
    PrgState next_state = derive_key(ratchet_).second;
    ChannelKey next_key = derive_key(next_state).first;
    if (auto plaintext = aead_open(next_key.key, envelope)) {
        advance_epoch();
        return plaintext;
    }
    return std::nullopt;
}

Bytes Hsm::seal(BytesView plaintext) {
    auto nonce = direction_nonce(kDirectionDownlink, 0, nonce_counter_++);
    return aead_seal(key_.key, BytesView(nonce.data(), nonce.size()), plaintext);
}

void Hsm::advance_epoch() {
    archives_.push_back(EpochArchive{ratchet_.counter, log_.size(), log_.root()});
    log_ = MerkleLog();
    response_cache_.clear();
    nonce_counter_ = 0;
    ratchet_ = derive_key(ratchet_).second;
    key_ = derive_key(ratchet_).first;
}

SignResult Hsm::sign_certificate(const CsrMessage& request) {
    SignResult result;
    SignedCertificate cert;
    cert.csr = request;
    cert.signer_epoch = epoch();
    cert.leaf_index = log_.size();

    const Bytes payload =
        cert_signed_payload(cert.signer_epoch, cert.leaf_index, cert.csr.encode());
    for (uint32_t attempt = 0; attempt <= config_.retry_limit; ++attempt) {
        Bytes signature = sign(keypair_, payload);
        if (fault_threshold_ != 0 && fault_rng_.next() < fault_threshold_) {
            // Simulated radiation upset: flip one bit of the fresh signature.
            uint64_t bit = fault_rng_.next() % (signature.size() * 8);
            signature[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        }
        if (verify(config_.scheme, keypair_.public_key, payload, signature)) {
            cert.signature = std::move(signature);
            log_.append(cert.encode());
            result.status = SignStatus::Ok;
            result.certificate = std::move(cert);
            return result;
        }
        ++result.faults_detected;
        ++faults_total_;
    }
    result.status = SignStatus::FaultExhausted;
    return result;
}

UplinkResult Hsm::process_uplink(BytesView plaintext) {
    UplinkResult result;
    auto request = CsrMessage::decode(plaintext);
    if (!request) {
        result.status = UplinkStatus::Malformed;
        return result;
    }
    if (auto it = response_cache_.find(request->request_id);
        it != response_cache_.end()) {
        result.status = UplinkStatus::Duplicate;
        result.response = it->second;
        return result;
    }
    SignResult signed_result = sign_certificate(*request);
    result.faults_detected = signed_result.faults_detected;
    if (signed_result.status != SignStatus::Ok) {
        result.status = UplinkStatus::FaultExhausted;
        return result;
    }
    CertResponse response;
    response.request_id = request->request_id;
    response.signer_epoch = signed_result.certificate->signer_epoch;
    response.leaf_index = signed_result.certificate->leaf_index;
    response.signature = signed_result.certificate->signature;
    response.accumulator_root = log_.root();
    response.log_size = log_.size();
    response_cache_[request->request_id] = response;

    result.status = UplinkStatus::Ok;
    result.response = std::move(response);
    result.certificate = std::move(signed_result.certificate);
    return result;
}

BeaconMessage Hsm::make_beacon() {
    BeaconMessage beacon;
    beacon.scheme = config_.scheme;
    beacon.public_key = keypair_.public_key;
    beacon.accumulator_root = log_.root();
    beacon.log_size = log_.size();
    beacon.epoch = epoch();
    beacon.sequence = beacon_sequence_++;
    beacon.beacon_signature = sign(keypair_, beacon.signed_payload());
    return beacon;
}

void Hsm::set_fault_rate(double rate) {
    config_.fault_rate = rate;
    fault_threshold_ = threshold_from_rate(rate);
}

Attestation Hsm::attest_peer(BytesView peer_public_key) const {
    Attestation attestation;
    attestation.attested_key = Bytes(peer_public_key.begin(), peer_public_key.end());
    attestation.attester_key = keypair_.public_key;
    attestation.signature = sign(keypair_, attestation_signed_payload(peer_public_key));
    return attestation;
}

uint64_t Hsm::total_signed() const {
    uint64_t total = log_.size();
    for (const auto& archive : archives_) total += archive.size;
    return total;
}

} // namespace spacehsm
