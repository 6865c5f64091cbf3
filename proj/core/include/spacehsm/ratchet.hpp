// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_RATCHET_HPP
#define SPACEHSM_RATCHET_HPP

/// \file
/// Channel-key ratchet. A PRG seed is generated before launch, programmed
/// into the satellite and mirrored in offline terrestrial storage. Epoch i's
/// symmetric key is SHA-256(state_i || "key") and the state advances one-way
/// via SHA-256(state_i || "next"), so compromise of a later state reveals no
/// earlier key.

#include <cstdint>
#include <utility>

#include "spacehsm/hash.hpp"

namespace spacehsm {

/// PRG state at epoch `counter`. The pair (state, counter) deterministically
/// fixes every later key in the sequence.
struct PrgState {
    Digest state;
    uint64_t counter = 0;

    static PrgState from_seed(const Digest& seed) { return PrgState{seed, 0}; }
};

/// Symmetric channel key for one epoch (AES-256 keying material).
struct ChannelKey {
    Digest key;
    uint64_t epoch = 0;
};

/// Key for the state's current epoch plus the advanced state for the next.
/// Deriving never mutates its input; callers decide whether to adopt the
/// advanced state.
std::pair<ChannelKey, PrgState> derive_key(const PrgState& ratchet);

} // namespace spacehsm

#endif
