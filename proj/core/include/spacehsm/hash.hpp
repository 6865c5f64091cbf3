// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_HASH_HPP
#define SPACEHSM_HASH_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "spacehsm/bytes.hpp"

namespace spacehsm {

/// 32-byte SHA-256 output. The accumulator root, ratchet states and
/// channel keys are all values of this width.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    std::string hex() const { return hex_encode(bytes); }
    Bytes to_vec() const { return Bytes(bytes.begin(), bytes.end()); }
    BytesView view() const { return BytesView(bytes.data(), bytes.size()); }

    static Digest from(BytesView b); // requires b.size() == 32
};

Digest sha256(BytesView data);
Digest sha256(const Bytes& data);

} // namespace spacehsm

#endif
