// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_ACCUMULATOR_HPP
#define SPACEHSM_ACCUMULATOR_HPP

/// \file
/// Append-only Merkle hash-tree accumulator with inclusion and consistency
/// proofs. The satellite maintains one to commit to its signing history and
/// broadcasts the 32-byte root; log servers and monitors recompute the same
/// construction over the public certificate log and compare.
///
/// Tree shape: leaves are hashed as SHA-256(0x00 || data), interior nodes as
/// SHA-256(0x01 || left || right), and an n-leaf tree splits at the largest
/// power of two strictly below n. The empty tree hashes to SHA-256 of the
/// empty string. Roots are therefore reproducible against the widely used
/// transparency-log test vectors.

#include <cstdint>
#include <optional>
#include <vector>

#include "spacehsm/bytes.hpp"
#include "spacehsm/hash.hpp"

namespace spacehsm {

Digest leaf_hash(BytesView data);
Digest node_hash(const Digest& left, const Digest& right);
Digest empty_root();

/// Audit path for one leaf, sibling hashes in leaf-to-root order.
struct InclusionProof {
    uint64_t leaf_index = 0;
    uint64_t tree_size = 0;
    std::vector<Digest> path;

    Bytes encode() const;
    static std::optional<InclusionProof> decode(BytesView b);
};

/// Proof that the tree of new_size leaves is an append-only extension of
/// the tree of old_size leaves.
struct ConsistencyProof {
    uint64_t old_size = 0;
    uint64_t new_size = 0;
    std::vector<Digest> path;

    Bytes encode() const;
    static std::optional<ConsistencyProof> decode(BytesView b);
};

/// Append-only leaf sequence plus an incrementally maintained root.
///
/// Value semantics throughout: copies are independent snapshots, and every
/// operation is a pure function of the leaves appended so far. The compact
/// root is carried as one subtree hash per set bit of the leaf count, the
/// usual trick for appending without rebuilding earlier nodes.
class MerkleLog {
public:
    void append(BytesView leaf);
    void append(const Bytes& leaf) { append(BytesView(leaf.data(), leaf.size())); }

    size_t size() const { return leaves_.size(); }
    const Bytes& leaf(size_t index) const;

    /// Root over all leaves. O(log n) from the maintained peaks.
    Digest root() const;

    /// Root over the first `count` leaves only (recomputed, O(count)).
    /// Throws std::out_of_range if count > size().
    Digest prefix_root(size_t count) const;

    /// Throws std::out_of_range if index >= size().
    InclusionProof prove_inclusion(size_t index) const;

    /// Throws std::out_of_range unless 0 < old_size <= size().
    ConsistencyProof prove_consistency(size_t old_size) const;

private:
    Digest range_root(size_t lo, size_t hi) const;
    void range_path(size_t index, size_t lo, size_t hi, std::vector<Digest>& out) const;
    void range_consistency(size_t m, size_t lo, size_t hi, bool whole,
                           std::vector<Digest>& out) const;

    std::vector<Bytes> leaves_;
    std::vector<Digest> peaks_; // peaks_[i] covers 2^i leaves when bit i of size is set
};

/// True iff recomputing the path from leaf_hash(leaf), choosing sides by the
/// index bits, reproduces `root`. Malformed proofs return false, never throw.
bool verify_inclusion(const Digest& root, BytesView leaf, const InclusionProof& proof);

/// True iff the proof shows the new tree extends the old one. Malformed
/// input returns false, never throws.
bool verify_consistency(const Digest& old_root, const Digest& new_root,
                        const ConsistencyProof& proof);

} // namespace spacehsm

#endif
