// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/accumulator.hpp"

#include <bit>
#include <stdexcept>

namespace spacehsm {

namespace {

// Largest power of two strictly less than n. Requires n >= 2.
uint64_t split_point(uint64_t n) {
    return std::bit_floor(n - 1);
}

constexpr uint16_t kMaxProofPath = 128;

} // namespace

Digest leaf_hash(BytesView data) {
    Bytes buf;
    buf.reserve(data.size() + 1);
    buf.push_back(0x00);
    buf.insert(buf.end(), data.begin(), data.end());
    return sha256(buf);
}

Digest node_hash(const Digest& left, const Digest& right) {
    Bytes buf;
    buf.reserve(65);
    buf.push_back(0x01);
    buf.insert(buf.end(), left.bytes.begin(), left.bytes.end());
    buf.insert(buf.end(), right.bytes.begin(), right.bytes.end());
    return sha256(buf);
}

Digest empty_root() {
    return sha256(BytesView{});
}

void MerkleLog::append(BytesView leaf) {
    leaves_.emplace_back(leaf.begin(), leaf.end());

    // Merge the new leaf hash with existing peaks for every trailing set
    // bit of the previous size, exactly like binary increment.
    Digest carry = leaf_hash(leaf);
    size_t n = leaves_.size() - 1;
    while (n & 1) {
        carry = node_hash(peaks_.back(), carry);
        peaks_.pop_back();
        n >>= 1;
    }
    peaks_.push_back(carry);
}

const Bytes& MerkleLog::leaf(size_t index) const {
    if (index >= leaves_.size()) throw std::out_of_range("MerkleLog::leaf: index out of range");
    return leaves_[index];
}

Digest MerkleLog::root() const {
    if (leaves_.empty()) return empty_root();
    // Bag the peaks right to left; the rightmost peak is the lowest one.
    Digest acc = peaks_.back();
    for (auto it = peaks_.rbegin() + 1; it != peaks_.rend(); ++it) {
        acc = node_hash(*it, acc);
    }
    return acc;
}

Digest MerkleLog::range_root(size_t lo, size_t hi) const {
    if (hi - lo == 1) return leaf_hash(leaves_[lo]);
    size_t k = split_point(hi - lo);
    return node_hash(range_root(lo, lo + k), range_root(lo + k, hi));
}

Digest MerkleLog::prefix_root(size_t count) const {
    if (count > leaves_.size()) throw std::out_of_range("MerkleLog::prefix_root: count out of range");
    if (count == 0) return empty_root();
    return range_root(0, count);
}

void MerkleLog::range_path(size_t index, size_t lo, size_t hi,
                           std::vector<Digest>& out) const {
    if (hi - lo == 1) return;
    size_t k = split_point(hi - lo);
    if (index - lo < k) {
        range_path(index, lo, lo + k, out);
        out.push_back(range_root(lo + k, hi));
    } else {
        range_path(index, lo + k, hi, out);
        out.push_back(range_root(lo, lo + k));
    }
}

InclusionProof MerkleLog::prove_inclusion(size_t index) const {
    if (index >= leaves_.size()) {
        throw std::out_of_range("MerkleLog::prove_inclusion: index out of range");
    }
    InclusionProof proof;
    proof.leaf_index = index;
    proof.tree_size = leaves_.size();
    range_path(index, 0, leaves_.size(), proof.path);
    return proof;
}

// Subproof over leaves [lo, hi); `whole` marks that this subtree is
// entirely part of the old tree and its root is known to the verifier.
void MerkleLog::range_consistency(size_t m, size_t lo, size_t hi, bool whole,
                                  std::vector<Digest>& out) const {
    size_t n = hi - lo;
    if (m == n) {
        if (!whole) out.push_back(range_root(lo, hi));
        return;
    }
    size_t k = split_point(n);
    if (m <= k) {
        range_consistency(m, lo, lo + k, whole, out);
        out.push_back(range_root(lo + k, hi));
    } else {
        range_consistency(m - k, lo + k, hi, false, out);
        out.push_back(range_root(lo, lo + k));
    }
}

ConsistencyProof MerkleLog::prove_consistency(size_t old_size) const {
    if (old_size == 0 || old_size > leaves_.size()) {
        throw std::out_of_range("MerkleLog::prove_consistency: old_size out of range");
    }
    ConsistencyProof proof;
    proof.old_size = old_size;
    proof.new_size = leaves_.size();
    if (old_size < leaves_.size()) {
        range_consistency(old_size, 0, leaves_.size(), true, proof.path);
    }
    return proof;
}

bool verify_inclusion(const Digest& root, BytesView leaf, const InclusionProof& proof) {
    if (proof.tree_size == 0 || proof.leaf_index >= proof.tree_size) return false;

    uint64_t fn = proof.leaf_index;
    uint64_t sn = proof.tree_size - 1;
    Digest r = leaf_hash(leaf);
    for (const Digest& p : proof.path) {
        if (sn == 0) return false;
        if ((fn & 1) || fn == sn) {
            r = node_hash(p, r);
            if (!(fn & 1)) {
                while (fn != 0 && !(fn & 1)) {
                    fn >>= 1;
                    sn >>= 1;
                }
            }
        } else {
            r = node_hash(r, p);
        }
        fn >>= 1;
        sn >>= 1;
    }
    return sn == 0 && r == root;
}

bool verify_consistency(const Digest& old_root, const Digest& new_root,
                        const ConsistencyProof& proof) {
    uint64_t m = proof.old_size;
    uint64_t n = proof.new_size;
    if (m == 0 || m > n) return false;
    if (m == n) return proof.path.empty() && old_root == new_root;

    size_t idx = 0;
    uint64_t fn = m - 1;
    uint64_t sn = n - 1;
    while (fn & 1) {
        fn >>= 1;
        sn >>= 1;
    }

    Digest fr, sr;
    if (fn != 0) {
        if (proof.path.empty()) return false;
        fr = sr = proof.path[idx++];
    } else {
        fr = sr = old_root;
    }

    for (; idx < proof.path.size(); ++idx) {
        const Digest& c = proof.path[idx];
        if (sn == 0) return false;
        if ((fn & 1) || fn == sn) {
            fr = node_hash(c, fr);
            sr = node_hash(c, sr);
            if (!(fn & 1)) {
                while (fn != 0 && !(fn & 1)) {
                    fn >>= 1;
                    sn >>= 1;
                }
            }
        } else {
            sr = node_hash(sr, c);
        }
        fn >>= 1;
        sn >>= 1;
    }
    return sn == 0 && fr == old_root && sr == new_root;
}

Bytes InclusionProof::encode() const {
    ByteWriter w;
    w.u64(tree_size);
    w.u64(leaf_index);
    w.u16(static_cast<uint16_t>(path.size()));
    for (const Digest& d : path) w.raw(d.view());
    return w.take();
}

std::optional<InclusionProof> InclusionProof::decode(BytesView b) {
    ByteReader r(b);
    InclusionProof p;
    auto size = r.u64();
    auto index = r.u64();
    auto len = r.u16();
    if (!size || !index || !len || *len > kMaxProofPath) return std::nullopt;
    p.tree_size = *size;
    p.leaf_index = *index;
    for (uint16_t i = 0; i < *len; ++i) {
        auto d = r.raw(32);
        if (!d) return std::nullopt;
        p.path.push_back(Digest::from(*d));
    }
    if (!r.done()) return std::nullopt;
    return p;
}

Bytes ConsistencyProof::encode() const {
    ByteWriter w;
    w.u64(new_size);
    w.u64(old_size);
    w.u16(static_cast<uint16_t>(path.size()));
    for (const Digest& d : path) w.raw(d.view());
    return w.take();
}

std::optional<ConsistencyProof> ConsistencyProof::decode(BytesView b) {
    ByteReader r(b);
    ConsistencyProof p;
    auto new_size = r.u64();
    auto old_size = r.u64();
    auto len = r.u16();
    if (!new_size || !old_size || !len || *len > kMaxProofPath) return std::nullopt;
    p.new_size = *new_size;
    p.old_size = *old_size;
    for (uint16_t i = 0; i < *len; ++i) {
        auto d = r.raw(32);
        if (!d) return std::nullopt;
        p.path.push_back(Digest::from(*d));
    }
    if (!r.done()) return std::nullopt;
    return p;
}

} // namespace spacehsm
