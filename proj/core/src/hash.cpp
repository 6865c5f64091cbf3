// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/hash.hpp"

#include <cassert>
#include <stdexcept>

#include <openssl/sha.h>

namespace spacehsm {

Digest Digest::from(BytesView b) {
    if (b.size() != 32) throw std::invalid_argument("Digest::from: need 32 bytes");
    Digest d;
    std::copy(b.begin(), b.end(), d.bytes.begin());
    return d;
}

Digest sha256(BytesView data) {
    Digest d;
    SHA256(data.data(), data.size(), d.bytes.data());
    return d;
}

Digest sha256(const Bytes& data) {
    return sha256(BytesView(data.data(), data.size()));
}

} // namespace spacehsm
