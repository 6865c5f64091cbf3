// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_BYTES_HPP
#define SPACEHSM_BYTES_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spacehsm {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(BytesView b);

std::string hex_encode(BytesView b);
std::optional<Bytes> hex_decode(std::string_view hex);

std::string base64_encode(BytesView b);
std::optional<Bytes> base64_decode(std::string_view b64);

/// Big-endian append-only encoder for the canonical wire layouts.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void raw(BytesView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void raw(const Bytes& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Big-endian cursor decoder. All reads fail soft (nullopt) past the end;
/// verifiers turn that into "false", parsers into a reject.
class ByteReader {
public:
    explicit ByteReader(BytesView b) : data_(b) {}

    std::optional<uint8_t> u8();
    std::optional<uint16_t> u16();
    std::optional<uint32_t> u32();
    std::optional<uint64_t> u64();
    std::optional<Bytes> raw(size_t n);

    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    BytesView data_;
    size_t pos_ = 0;
};

} // namespace spacehsm

#endif
