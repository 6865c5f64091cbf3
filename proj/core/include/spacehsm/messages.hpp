// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_MESSAGES_HPP
#define SPACEHSM_MESSAGES_HPP

/// \file
/// Protocol payloads and their canonical serializations. Every layout is
/// big-endian and length-prefixed, and is normative: accumulator leaves are
/// canonical SignedCertificate bytes, so two independent implementations
/// must produce identical encodings to agree on roots.
///
/// Layouts (all integers big-endian):
///
///   CsrMessage        u32 subject_len || subject || request_id[16]
///                     || u64 timestamp_us
///   SignedCertificate u32 csr_len || csr || u16 sig_len || signature
///                     || u64 signer_epoch || u64 leaf_index
///   CertResponse      request_id[16] || u64 signer_epoch || u64 leaf_index
///                     || u16 sig_len || signature || root[32] || u64 log_size
///   BeaconMessage     u16 scheme || u16 pk_len || public_key || root[32]
///                     || u64 log_size || u64 epoch || u64 sequence
///                     || u16 sig_len || beacon_signature
///                     (signed over everything before sig_len, prefixed with
///                      the domain string "SHSM-BEACON-v1")
///   Attestation       u16 attested_len || attested_key || u16 attester_len
///                     || attester_key || u16 sig_len || signature
///                     (signed over "SHSM-ATTEST-v1" || attested_key)

#include <cstdint>
#include <optional>

#include "spacehsm/bytes.hpp"
#include "spacehsm/hash.hpp"
#include "spacehsm/signature.hpp"

namespace spacehsm {

/// Serialized size of a CSR whose subject is empty.
constexpr size_t kCsrFixedOverhead = 4 + 16 + 8;

/// Mission default: a 2.5 KiB certificate signing request.
constexpr size_t kDefaultCsrSize = 2560;

/// Opaque certificate request. The subject is arbitrary bytes; the
/// request_id doubles as the idempotency token for uplink retries.
struct CsrMessage {
    Bytes subject;
    std::array<uint8_t, 16> request_id{};
    uint64_t timestamp_us = 0;

    Bytes encode() const;
    static std::optional<CsrMessage> decode(BytesView b);

    size_t encoded_size() const { return kCsrFixedOverhead + subject.size(); }
};

struct SignedCertificate {
    CsrMessage csr;
    Bytes signature;
    uint64_t signer_epoch = 0;
    uint64_t leaf_index = 0;

    /// Canonical bytes; this exact encoding is the accumulator leaf.
    Bytes encode() const;
    static std::optional<SignedCertificate> decode(BytesView b);
};

/// Compact downlink answer to one request. The requester already holds the
/// CSR, so only the signature and log coordinates travel back; with a
/// 256-byte signature this fits in two AX.25 frames.
struct CertResponse {
    std::array<uint8_t, 16> request_id{};
    uint64_t signer_epoch = 0;
    uint64_t leaf_index = 0;
    Bytes signature;
    Digest accumulator_root;
    uint64_t log_size = 0;

    Bytes encode() const;
    static std::optional<CertResponse> decode(BytesView b);
};

struct BeaconMessage {
    SignatureScheme scheme = SignatureScheme::Ed25519Pad256;
    Bytes public_key;
    Digest accumulator_root;
    uint64_t log_size = 0;
    uint64_t epoch = 0;
    uint64_t sequence = 0;
    Bytes beacon_signature;

    Bytes encode() const;
    static std::optional<BeaconMessage> decode(BytesView b);

    /// Bytes covered by beacon_signature.
    Bytes signed_payload() const;
    bool verify_signature() const;
};

/// Cross-signed public key from the line-of-sight exchange between two
/// satellites.
struct Attestation {
    Bytes attested_key;
    Bytes attester_key;
    Bytes signature;

    Bytes encode() const;
    static std::optional<Attestation> decode(BytesView b);
};

Bytes attestation_signed_payload(BytesView attested_key);

/// Bytes covered by a certificate's signature: the domain string
/// "SHSM-CERT-v1", the signer epoch, the leaf index, then the canonical CSR
/// encoding. Binding the log coordinates means nobody can replay a valid
/// signature under a different epoch or position, and domain separation
/// keeps certificate, beacon and attestation signatures mutually unusable.
Bytes cert_signed_payload(uint64_t signer_epoch, uint64_t leaf_index,
                          BytesView csr_bytes);

} // namespace spacehsm

#endif
