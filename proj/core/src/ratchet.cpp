// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/ratchet.hpp"

namespace spacehsm {

namespace {

Digest tagged_hash(const Digest& state, const char* tag) {
    Bytes buf(state.bytes.begin(), state.bytes.end());
    for (const char* p = tag; *p; ++p) buf.push_back(static_cast<uint8_t>(*p));
    return sha256(buf);
}

} // namespace

std::pair<ChannelKey, PrgState> derive_key(const PrgState& ratchet) {
    ChannelKey key{tagged_hash(ratchet.state, "key"), ratchet.counter};
    PrgState next{tagged_hash(ratchet.state, "next"), ratchet.counter + 1};
    return {key, next};
}

} // namespace spacehsm
