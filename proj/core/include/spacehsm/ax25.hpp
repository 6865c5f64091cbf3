// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_AX25_HPP
#define SPACEHSM_AX25_HPP

/// \file
/// Byte-level AX.25 UI framing as flown on amateur-band CubeSat links.
///
/// On-air layout of one frame (35 bytes of overhead around the info field):
///
///   0x7E x16          preamble flags
///   dest[7] src[7]    callsigns, characters shifted left one bit
///   0x03              control (UI frame)
///   0xF0              PID (no layer-3 protocol)
///   info[0..256]      payload: 5-byte MessageHeader + up to 251 data bytes
///   fcs[2]            CRC-16/X.25 over address..info, low byte first
///   0x7E              closing flag
///
/// Bit-stuffing and NRZI happen below this model; the simulator treats the
/// byte image as what the channel carries, so airtime is 8 * encoded size /
/// bit-rate and a frame's hex dump is its exact on-air identity.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spacehsm/bytes.hpp"

namespace spacehsm {

constexpr size_t kAx25LeadingFlags = 16;
constexpr size_t kAx25MaxInfo = 256;
/// Flags + addresses + control + PID + FCS + closing flag.
constexpr size_t kAx25Overhead = kAx25LeadingFlags + 7 + 7 + 1 + 1 + 2 + 1;
constexpr size_t kMessageHeaderSize = 5;
constexpr size_t kMaxFrameData = kAx25MaxInfo - kMessageHeaderSize; // 251
constexpr size_t kMaxFragmentPayload = kMaxFrameData * 255;

/// CRC-16/X.25: reflected polynomial 0x8408, init and final XOR 0xFFFF.
/// crc16_x25("123456789") == 0x906E.
uint16_t crc16_x25(BytesView data);

/// Thrown when a payload cannot fit the 8-bit frame counter.
struct SizeError : std::length_error {
    using std::length_error::length_error;
};

struct Callsign {
    std::string name; // up to 6 ASCII characters
    uint8_t ssid = 0; // 0..15

    /// 7-byte shifted encoding; `last` sets the address-extension bit.
    std::array<uint8_t, 7> encode(bool last) const;
    static std::optional<Callsign> decode(BytesView b7);

    bool operator==(const Callsign&) const = default;
    auto operator<=>(const Callsign&) const = default;
};

enum class MessageKind : uint8_t {
    Request = 1,
    Response = 2,
    Beacon = 3,
    Attestation = 4,
};

/// First five bytes of every info field: which message this frame belongs
/// to and where it sits in that message.
struct MessageHeader {
    uint16_t message_id = 0;
    uint8_t total_frames = 1;
    uint8_t frame_index = 0;
    MessageKind kind = MessageKind::Request;

    Bytes encode() const;
    static std::optional<MessageHeader> decode(BytesView b);
};

struct Ax25Frame {
    Callsign dest;
    Callsign src;
    Bytes info; // MessageHeader + data, at most kAx25MaxInfo bytes

    /// Full on-air byte image, flags and FCS included.
    Bytes encode() const;

    /// Rejects short input, bad flags, bad callsigns, oversize info and FCS
    /// mismatch (a corrupted frame simply never existed as far as the layer
    /// above is concerned).
    static std::optional<Ax25Frame> decode(BytesView b);

    size_t encoded_size() const { return kAx25Overhead + info.size(); }
    std::optional<MessageHeader> header() const {
        return MessageHeader::decode(BytesView(info.data(), info.size()));
    }
    /// Info bytes after the header.
    BytesView data() const;
};

/// Splits a payload into ceil(len / 251) frames (one frame for an empty
/// payload). Throws SizeError beyond 251 * 255 bytes.
std::vector<Ax25Frame> fragment(const Callsign& dest, const Callsign& src,
                                uint16_t message_id, MessageKind kind,
                                BytesView payload);

struct ReassembledMessage {
    Callsign src;
    uint16_t message_id = 0;
    MessageKind kind = MessageKind::Request;
    Bytes payload;
};

/// Order-insensitive reassembly keyed by (source callsign, message_id).
/// Duplicate frames are idempotent, so a retransmitted message tops up
/// whatever fragments the first attempt delivered.
class Reassembler {
public:
    /// Returns the completed message when `frame` supplies the last missing
    /// fragment; nullopt while incomplete or when the frame is inconsistent
    /// with fragments already held.
    std::optional<ReassembledMessage> accept(const Ax25Frame& frame);

    size_t pending() const { return partials_.size(); }
    void clear() { partials_.clear(); }

private:
    struct Partial {
        uint8_t total_frames = 0;
        MessageKind kind = MessageKind::Request;
        std::map<uint8_t, Bytes> pieces;
    };
    std::map<std::pair<Callsign, uint16_t>, Partial> partials_;
};

/// One-shot helper: feeds every frame to a fresh Reassembler and returns the
/// payload of the message that completes, if any does.
std::optional<ReassembledMessage> reassemble(const std::vector<Ax25Frame>& frames);

} // namespace spacehsm

#endif
