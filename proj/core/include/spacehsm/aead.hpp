// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_AEAD_HPP
#define SPACEHSM_AEAD_HPP

/// \file
/// Authenticated encryption for the ground-to-satellite channel.
/// AES-256-GCM with a 12-byte nonce and 16-byte tag. The envelope layout is
/// nonce || ciphertext || tag; authentication failure is how the satellite
/// notices a channel-key epoch transition, so plain unauthenticated modes
/// are not an option here.

#include <optional>

#include "spacehsm/bytes.hpp"
#include "spacehsm/hash.hpp"

namespace spacehsm {

constexpr size_t kAeadNonceSize = 12;
constexpr size_t kAeadTagSize = 16;
constexpr size_t kAeadOverhead = kAeadNonceSize + kAeadTagSize;

/// Nonce construction for the bidirectional channel: one direction byte, a
/// 24-bit sender salt (station index on the uplink, zero on the downlink)
/// and a 64-bit big-endian counter. Distinct (direction, salt) pairs keep
/// every sender sharing the channel key on its own nonce sequence.
constexpr uint8_t kDirectionUplink = 0x01;
constexpr uint8_t kDirectionDownlink = 0x02;
std::array<uint8_t, kAeadNonceSize> direction_nonce(uint8_t direction,
                                                    uint32_t sender_salt24,
                                                    uint64_t counter);

/// Returns nonce || ciphertext || tag.
Bytes aead_seal(const Digest& key, BytesView nonce12, BytesView plaintext);

/// Returns the plaintext, or nullopt if authentication fails or the
/// envelope is malformed.
std::optional<Bytes> aead_open(const Digest& key, BytesView envelope);

} // namespace spacehsm

#endif
