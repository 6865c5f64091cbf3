// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "doctest.h"
#include "spacehsm/aead.hpp"
#include "spacehsm/hash.hpp"
#include "spacehsm/hsm.hpp"
#include "spacehsm/ratchet.hpp"

using namespace spacehsm;

namespace {

struct Rig {
    Hsm hsm;
    BeaconMessage first_beacon;
    PrgState seed_state;
    ChannelKey ground_key;
    uint64_t counter = 0;

    static Rig make(double fault_rate = 0.0, uint32_t retry_limit = 3) {
        Bytes entropy_src = {0x42};
        Digest entropy = sha256(BytesView(entropy_src.data(), entropy_src.size()));
        PrgState initial = PrgState::from_seed(sha256(BytesView()));
        HsmConfig config;
        config.fault_rate = fault_rate;
        config.retry_limit = retry_limit;
        auto boot = Hsm::bootstrap(entropy.view(), initial, config);
        return Rig{std::move(boot.first), std::move(boot.second), initial,
                   derive_key(initial).first};
    }

    CsrMessage csr(uint8_t tag, size_t subject_size = 64) {
        CsrMessage m;
        m.subject.assign(subject_size, tag);
        m.request_id.fill(tag);
        m.timestamp_us = tag;
        return m;
    }

    Bytes sealed_request(const CsrMessage& m, const ChannelKey& key,
                         uint32_t salt) {
        Bytes plain = m.encode();
        auto nonce = direction_nonce(kDirectionUplink, salt, counter++);
        return aead_seal(key.key, BytesView(nonce.data(), nonce.size()),
                         BytesView(plain.data(), plain.size()));
    }
};

} // namespace

TEST_CASE("bootstrap announces the key over an empty accumulator") {
    Rig rig = Rig::make();
    CHECK(rig.first_beacon.sequence == 0);
    CHECK(rig.first_beacon.epoch == 0);
    CHECK(rig.first_beacon.log_size == 0);
    CHECK(rig.first_beacon.accumulator_root == empty_root());
    CHECK(rig.first_beacon.public_key == rig.hsm.public_key());
    CHECK(rig.first_beacon.verify_signature());
    CHECK(rig.hsm.epoch() == 0);
    CHECK(rig.hsm.channel_key().key == rig.ground_key.key);
}

TEST_CASE("a signed certificate verifies and lands in the accumulator") {
    Rig rig = Rig::make();
    CsrMessage req = rig.csr(1);
    SignResult result = rig.hsm.sign_certificate(req);
    REQUIRE(result.status == SignStatus::Ok);
    REQUIRE(result.certificate.has_value());
    const SignedCertificate& cert = *result.certificate;
    CHECK(cert.signer_epoch == 0);
    CHECK(cert.leaf_index == 0);
    CHECK(rig.hsm.accumulator().size() == 1);
    CHECK(rig.hsm.total_signed() == 1);

    Bytes csr_bytes = cert.csr.encode();
    Bytes payload = cert_signed_payload(cert.signer_epoch, cert.leaf_index,
                                        BytesView(csr_bytes.data(), csr_bytes.size()));
    CHECK(verify(rig.hsm.scheme(),
                 BytesView(rig.hsm.public_key().data(),
                           rig.hsm.public_key().size()),
                 BytesView(payload.data(), payload.size()),
                 BytesView(cert.signature.data(), cert.signature.size())));

    // The accumulator leaf is the canonical certificate encoding.
    Bytes leaf = cert.encode();
    InclusionProof proof = rig.hsm.accumulator().prove_inclusion(0);
    CHECK(verify_inclusion(rig.hsm.accumulator().root(),
                           BytesView(leaf.data(), leaf.size()), proof));
}

TEST_CASE("uplink processing is idempotent per request id") {
    Rig rig = Rig::make();
    CsrMessage req = rig.csr(7);
    Bytes plain = req.encode();
    UplinkResult first = rig.hsm.process_uplink(BytesView(plain.data(),
                                                          plain.size()));
    REQUIRE(first.status == UplinkStatus::Ok);
    REQUIRE(first.response.has_value());
    CHECK(first.response->leaf_index == 0);
    CHECK(first.response->log_size == 1);

    UplinkResult again = rig.hsm.process_uplink(BytesView(plain.data(),
                                                          plain.size()));
    CHECK(again.status == UplinkStatus::Duplicate);
    REQUIRE(again.response.has_value());
    CHECK(again.response->leaf_index == 0);
    CHECK(rig.hsm.total_signed() == 1); // no second signature

    Bytes garbage = {1, 2, 3};
    UplinkResult bad = rig.hsm.process_uplink(BytesView(garbage.data(),
                                                        garbage.size()));
    CHECK(bad.status == UplinkStatus::Malformed);
}

TEST_CASE("decryption accepts the current key and the next, advancing once") {
    Rig rig = Rig::make();
    CsrMessage req = rig.csr(3);

    // Current-epoch traffic decrypts without advancing.
    Bytes env0 = rig.sealed_request(req, rig.ground_key, 1);
    CHECK(rig.hsm.try_decrypt(BytesView(env0.data(), env0.size())).has_value());
    CHECK(rig.hsm.epoch() == 0);

    // Next-epoch traffic advances permanently.
    PrgState s1 = derive_key(rig.seed_state).second;
    ChannelKey key1 = derive_key(s1).first;
    CHECK(key1.epoch == 1);
    Bytes env1 = rig.sealed_request(req, key1, 1);
    CHECK(rig.hsm.try_decrypt(BytesView(env1.data(), env1.size())).has_value());
    CHECK(rig.hsm.epoch() == 1);

    // Old-epoch traffic is now rejected: the ratchet never steps back.
    Bytes env_old = rig.sealed_request(req, rig.ground_key, 1);
    CHECK_FALSE(
        rig.hsm.try_decrypt(BytesView(env_old.data(), env_old.size())).has_value());

    // Two-epochs-ahead traffic is rejected too: lookahead is one step only.
    PrgState s2 = derive_key(s1).second;
    PrgState s3 = derive_key(s2).second;
    ChannelKey key3 = derive_key(s3).first;
    Bytes env3 = rig.sealed_request(req, key3, 1);
    CHECK_FALSE(
        rig.hsm.try_decrypt(BytesView(env3.data(), env3.size())).has_value());
    CHECK(rig.hsm.epoch() == 1);
}

TEST_CASE("epoch advance archives the accumulator and restarts the cache") {
    Rig rig = Rig::make();
    CsrMessage req = rig.csr(5);
    Bytes plain = req.encode();
    REQUIRE(rig.hsm.process_uplink(BytesView(plain.data(), plain.size())).status ==
            UplinkStatus::Ok);
    Digest epoch0_root = rig.hsm.accumulator().root();

    rig.hsm.advance_epoch();
    CHECK(rig.hsm.epoch() == 1);
    REQUIRE(rig.hsm.archived_epochs().size() == 1);
    CHECK(rig.hsm.archived_epochs()[0].epoch == 0);
    CHECK(rig.hsm.archived_epochs()[0].size == 1);
    CHECK(rig.hsm.archived_epochs()[0].root == epoch0_root);
    CHECK(rig.hsm.accumulator().size() == 0);

    // Same request id signs again in the new epoch (fresh cache), and the
    // leaf index restarts.
    UplinkResult again = rig.hsm.process_uplink(BytesView(plain.data(),
                                                          plain.size()));
    REQUIRE(again.status == UplinkStatus::Ok);
    CHECK(again.response->signer_epoch == 1);
    CHECK(again.response->leaf_index == 0);
    CHECK(rig.hsm.total_signed() == 2);
}

TEST_CASE("seal round-trips against the ground key") {
    Rig rig = Rig::make();
    Bytes msg = {9, 9, 9};
    Bytes env = rig.hsm.seal(BytesView(msg.data(), msg.size()));
    auto opened = aead_open(rig.ground_key.key, BytesView(env.data(), env.size()));
    REQUIRE(opened.has_value());
    CHECK(*opened == msg);
    // Distinct seals use distinct nonces.
    Bytes env2 = rig.hsm.seal(BytesView(msg.data(), msg.size()));
    CHECK(env != env2);
}

TEST_CASE("beacon sequence increments and covers the live accumulator") {
    Rig rig = Rig::make();
    BeaconMessage b1 = rig.hsm.make_beacon();
    CHECK(b1.sequence == 1);
    CsrMessage req = rig.csr(2);
    Bytes plain = req.encode();
    (void)rig.hsm.process_uplink(BytesView(plain.data(), plain.size()));
    BeaconMessage b2 = rig.hsm.make_beacon();
    CHECK(b2.sequence == 2);
    CHECK(b2.log_size == 1);
    CHECK(b2.epoch == 0);
    CHECK(b2.accumulator_root == rig.hsm.accumulator().root());
    CHECK(b2.verify_signature());
}

TEST_CASE("faults are detected internally and never released") {
    // Half of all signing passes are corrupted; with three retries the
    // exhaustion probability per request is 1/16.
    Rig rig = Rig::make(0.5, 3);
    uint64_t released = 0;
    uint64_t exhausted = 0;
    uint64_t faults = 0;
    for (uint32_t i = 0; i < 2000; ++i) {
        CsrMessage req;
        req.subject.assign(32, static_cast<uint8_t>(i));
        for (size_t j = 0; j < 16; ++j) {
            req.request_id[j] = static_cast<uint8_t>((i >> (j % 2 * 8)) ^ j);
        }
        req.timestamp_us = i;
        SignResult result = rig.hsm.sign_certificate(req);
        faults += result.faults_detected;
        if (result.status == SignStatus::Ok) {
            ++released;
            // Every released signature verifies: corruption never escapes.
            Bytes csr_bytes = result.certificate->csr.encode();
            Bytes payload = cert_signed_payload(
                result.certificate->signer_epoch,
                result.certificate->leaf_index,
                BytesView(csr_bytes.data(), csr_bytes.size()));
            CHECK(verify(rig.hsm.scheme(),
                         BytesView(rig.hsm.public_key().data(),
                                   rig.hsm.public_key().size()),
                         BytesView(payload.data(), payload.size()),
                         BytesView(result.certificate->signature.data(),
                                   result.certificate->signature.size())));
        } else {
            ++exhausted;
        }
    }
    CHECK(released + exhausted == 2000);
    // Accumulator only grew for released signatures.
    CHECK(rig.hsm.accumulator().size() == released);
    CHECK(rig.hsm.total_signed() == released);
    CHECK(rig.hsm.faults_detected_total() == faults);
    // At rate 0.5 roughly half the passes fault; sanity-band the counters.
    CHECK(faults > 1000);
    CHECK(exhausted > 30);
    CHECK(exhausted < 400);
    CHECK(released > 1600);
}

TEST_CASE("fault draws are deterministic for a fixed entropy") {
    Rig a = Rig::make(0.3, 2);
    Rig b = Rig::make(0.3, 2);
    for (uint32_t i = 0; i < 200; ++i) {
        CsrMessage req = a.csr(static_cast<uint8_t>(i), 16);
        CsrMessage req_b = b.csr(static_cast<uint8_t>(i), 16);
        SignResult ra = a.hsm.sign_certificate(req);
        SignResult rb = b.hsm.sign_certificate(req_b);
        CHECK(ra.status == rb.status);
        CHECK(ra.faults_detected == rb.faults_detected);
    }
    CHECK(a.hsm.faults_detected_total() == b.hsm.faults_detected_total());
}

TEST_CASE("peer attestation verifies against the attester's key") {
    Rig device = Rig::make();
    Bytes peer_entropy_src = {0x99};
    Digest peer_entropy =
        sha256(BytesView(peer_entropy_src.data(), peer_entropy_src.size()));
    PrgState peer_ratchet = PrgState::from_seed(peer_entropy);
    auto peer = Hsm::bootstrap(peer_entropy.view(), peer_ratchet, HsmConfig{});

    Attestation att = peer.first.attest_peer(
        BytesView(device.hsm.public_key().data(),
                  device.hsm.public_key().size()));
    CHECK(att.attested_key == device.hsm.public_key());
    CHECK(att.attester_key == peer.first.public_key());
    Bytes payload = attestation_signed_payload(
        BytesView(att.attested_key.data(), att.attested_key.size()));
    CHECK(verify(peer.first.scheme(),
                 BytesView(att.attester_key.data(), att.attester_key.size()),
                 BytesView(payload.data(), payload.size()),
                 BytesView(att.signature.data(), att.signature.size())));
    // The attestation does not verify for a different subject key.
    Bytes other_payload = attestation_signed_payload(
        BytesView(peer.first.public_key().data(),
                  peer.first.public_key().size()));
    CHECK_FALSE(verify(peer.first.scheme(),
                       BytesView(att.attester_key.data(), att.attester_key.size()),
                       BytesView(other_payload.data(), other_payload.size()),
                       BytesView(att.signature.data(), att.signature.size())));
}
