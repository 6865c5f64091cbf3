// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_SIGNATURE_HPP
#define SPACEHSM_SIGNATURE_HPP

/// \file
/// Pluggable signature schemes for the satellite signing key.
///
/// The default scheme, Ed25519Pad256, produces 256-byte signatures so wire
/// sizes match an RSA-2048 deployment: a real Ed25519 signature followed by
/// 192 bytes of deterministic expansion blocks that the verifier recomputes.
/// Flipping any bit of the 256 bytes breaks verification, which is what the
/// fault-protection path relies on. Key generation is deterministic from a
/// 32-byte seed so simulation runs replay bit-identically.

#include <cstdint>
#include <optional>
#include <string>

#include "spacehsm/bytes.hpp"

namespace spacehsm {

enum class SignatureScheme : uint16_t {
    Ed25519 = 1,        // raw 64-byte signatures
    Ed25519Pad256 = 2,  // 64-byte core + 192-byte expansion, RSA-2048 sized
};

std::optional<SignatureScheme> scheme_from_name(const std::string& name);
std::string scheme_name(SignatureScheme scheme);

/// Signature size in bytes for the scheme.
size_t signature_size(SignatureScheme scheme);

struct KeyPair {
    SignatureScheme scheme = SignatureScheme::Ed25519Pad256;
    Bytes public_key;
    Bytes private_key; // 32-byte seed

    static KeyPair generate(SignatureScheme scheme, BytesView seed32);
};

Bytes sign(const KeyPair& key, BytesView message);

/// False on any failure, malformed input included.
bool verify(SignatureScheme scheme, BytesView public_key, BytesView message,
            BytesView signature);

} // namespace spacehsm

#endif
