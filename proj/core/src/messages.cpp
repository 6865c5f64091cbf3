// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/messages.hpp"

#include <algorithm>

namespace spacehsm {

namespace {

constexpr uint32_t kMaxSubjectLen = 1 << 20;
constexpr uint16_t kMaxKeyLen = 1024;
constexpr uint16_t kMaxSigLen = 1024;

const char* kBeaconDomain = "SHSM-BEACON-v1";
const char* kAttestDomain = "SHSM-ATTEST-v1";
const char* kCertDomain = "SHSM-CERT-v1";

void append_domain(Bytes& buf, const char* domain) {
    for (const char* p = domain; *p; ++p) buf.push_back(static_cast<uint8_t>(*p));
}

} // namespace

Bytes CsrMessage::encode() const {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(subject.size()));
    w.raw(subject);
    w.raw(BytesView(request_id.data(), request_id.size()));
    w.u64(timestamp_us);
    return w.take();
}

std::optional<CsrMessage> CsrMessage::decode(BytesView b) {
    ByteReader r(b);
    auto len = r.u32();
    if (!len || *len > kMaxSubjectLen) return std::nullopt;
    auto subject = r.raw(*len);
    auto rid = r.raw(16);
    auto ts = r.u64();
    if (!subject || !rid || !ts || !r.done()) return std::nullopt;
    CsrMessage csr;
    csr.subject = std::move(*subject);
    std::copy(rid->begin(), rid->end(), csr.request_id.begin());
    csr.timestamp_us = *ts;
    return csr;
}

Bytes SignedCertificate::encode() const {
    Bytes csr_bytes = csr.encode();
    ByteWriter w;
    w.u32(static_cast<uint32_t>(csr_bytes.size()));
    w.raw(csr_bytes);
    w.u16(static_cast<uint16_t>(signature.size()));
    w.raw(signature);
    w.u64(signer_epoch);
    w.u64(leaf_index);
    return w.take();
}

std::optional<SignedCertificate> SignedCertificate::decode(BytesView b) {
    ByteReader r(b);
    auto csr_len = r.u32();
    if (!csr_len || *csr_len > kMaxSubjectLen + kCsrFixedOverhead) return std::nullopt;
    auto csr_bytes = r.raw(*csr_len);
    if (!csr_bytes) return std::nullopt;
    auto csr = CsrMessage::decode(*csr_bytes);
    if (!csr) return std::nullopt;
    auto sig_len = r.u16();
    if (!sig_len || *sig_len > kMaxSigLen) return std::nullopt;
    auto sig = r.raw(*sig_len);
    auto epoch = r.u64();
    auto index = r.u64();
    if (!sig || !epoch || !index || !r.done()) return std::nullopt;
    SignedCertificate cert;
    cert.csr = std::move(*csr);
    cert.signature = std::move(*sig);
    cert.signer_epoch = *epoch;
    cert.leaf_index = *index;
    return cert;
}

Bytes CertResponse::encode() const {
    ByteWriter w;
    w.raw(BytesView(request_id.data(), request_id.size()));
    w.u64(signer_epoch);
    w.u64(leaf_index);
    w.u16(static_cast<uint16_t>(signature.size()));
    w.raw(signature);
    w.raw(accumulator_root.view());
    w.u64(log_size);
    return w.take();
}

std::optional<CertResponse> CertResponse::decode(BytesView b) {
    ByteReader r(b);
    auto rid = r.raw(16);
    auto epoch = r.u64();
    auto index = r.u64();
    auto sig_len = r.u16();
    if (!rid || !epoch || !index || !sig_len || *sig_len > kMaxSigLen) return std::nullopt;
    auto sig = r.raw(*sig_len);
    auto root = r.raw(32);
    auto log_size = r.u64();
    if (!sig || !root || !log_size || !r.done()) return std::nullopt;
    CertResponse resp;
    std::copy(rid->begin(), rid->end(), resp.request_id.begin());
    resp.signer_epoch = *epoch;
    resp.leaf_index = *index;
    resp.signature = std::move(*sig);
    resp.accumulator_root = Digest::from(*root);
    resp.log_size = *log_size;
    return resp;
}

Bytes BeaconMessage::signed_payload() const {
    Bytes buf;
    append_domain(buf, kBeaconDomain);
    ByteWriter w;
    w.u16(static_cast<uint16_t>(scheme));
    w.u16(static_cast<uint16_t>(public_key.size()));
    w.raw(public_key);
    w.raw(accumulator_root.view());
    w.u64(log_size);
    w.u64(epoch);
    w.u64(sequence);
    Bytes body = w.take();
    buf.insert(buf.end(), body.begin(), body.end());
    return buf;
}

bool BeaconMessage::verify_signature() const {
    return verify(scheme, public_key, signed_payload(), beacon_signature);
}

Bytes BeaconMessage::encode() const {
    ByteWriter w;
    w.u16(static_cast<uint16_t>(scheme));
    w.u16(static_cast<uint16_t>(public_key.size()));
    w.raw(public_key);
    w.raw(accumulator_root.view());
    w.u64(log_size);
    w.u64(epoch);
    w.u64(sequence);
    w.u16(static_cast<uint16_t>(beacon_signature.size()));
    w.raw(beacon_signature);
    return w.take();
}

std::optional<BeaconMessage> BeaconMessage::decode(BytesView b) {
    ByteReader r(b);
    auto scheme_raw = r.u16();
    if (!scheme_raw) return std::nullopt;
    if (*scheme_raw != static_cast<uint16_t>(SignatureScheme::Ed25519) &&
        *scheme_raw != static_cast<uint16_t>(SignatureScheme::Ed25519Pad256)) {
        return std::nullopt;
    }
    auto pk_len = r.u16();
    if (!pk_len || *pk_len > kMaxKeyLen) return std::nullopt;
    auto pk = r.raw(*pk_len);
    auto root = r.raw(32);
    auto log_size = r.u64();
    auto epoch = r.u64();
    auto sequence = r.u64();
    auto sig_len = r.u16();
    if (!pk || !root || !log_size || !epoch || !sequence || !sig_len ||
        *sig_len > kMaxSigLen) {
        return std::nullopt;
    }
    auto sig = r.raw(*sig_len);
    if (!sig || !r.done()) return std::nullopt;
    BeaconMessage beacon;
    beacon.scheme = static_cast<SignatureScheme>(*scheme_raw);
    beacon.public_key = std::move(*pk);
    beacon.accumulator_root = Digest::from(*root);
    beacon.log_size = *log_size;
    beacon.epoch = *epoch;
    beacon.sequence = *sequence;
    beacon.beacon_signature = std::move(*sig);
    return beacon;
}

Bytes attestation_signed_payload(BytesView attested_key) {
    Bytes buf;
    append_domain(buf, kAttestDomain);
    buf.insert(buf.end(), attested_key.begin(), attested_key.end());
    return buf;
}

Bytes cert_signed_payload(uint64_t signer_epoch, uint64_t leaf_index,
                          BytesView csr_bytes) {
    Bytes buf;
    append_domain(buf, kCertDomain);
    ByteWriter w;
    w.u64(signer_epoch);
    w.u64(leaf_index);
    w.raw(csr_bytes);
    Bytes body = w.take();
    buf.insert(buf.end(), body.begin(), body.end());
    return buf;
}

Bytes Attestation::encode() const {
    ByteWriter w;
    w.u16(static_cast<uint16_t>(attested_key.size()));
    w.raw(attested_key);
    w.u16(static_cast<uint16_t>(attester_key.size()));
    w.raw(attester_key);
    w.u16(static_cast<uint16_t>(signature.size()));
    w.raw(signature);
    return w.take();
}

std::optional<Attestation> Attestation::decode(BytesView b) {
    ByteReader r(b);
    auto alen = r.u16();
    if (!alen || *alen > kMaxKeyLen) return std::nullopt;
    auto attested = r.raw(*alen);
    auto blen = r.u16();
    if (!attested || !blen || *blen > kMaxKeyLen) return std::nullopt;
    auto attester = r.raw(*blen);
    auto slen = r.u16();
    if (!attester || !slen || *slen > kMaxSigLen) return std::nullopt;
    auto sig = r.raw(*slen);
    if (!sig || !r.done()) return std::nullopt;
    Attestation att;
    att.attested_key = std::move(*attested);
    att.attester_key = std::move(*attester);
    att.signature = std::move(*sig);
    return att;
}

} // namespace spacehsm
