// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/ax25.hpp"

#include <algorithm>

namespace spacehsm {

uint16_t crc16_x25(BytesView data) {
    uint16_t crc = 0xFFFF;
    for (uint8_t byte : data) {
        crc ^= byte;
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 1u) ? static_cast<uint16_t>((crc >> 1) ^ 0x8408u)
                             : static_cast<uint16_t>(crc >> 1);
        }
    }
    return static_cast<uint16_t>(crc ^ 0xFFFFu);
}

std::array<uint8_t, 7> Callsign::encode(bool last) const {
    if (name.size() > 6) {
        throw std::invalid_argument("Callsign: name exceeds 6 characters");
    }
    if (ssid > 15) {
        throw std::invalid_argument("Callsign: ssid exceeds 15");
    }
    std::array<uint8_t, 7> out{};
    for (size_t i = 0; i < 6; ++i) {
        char c = i < name.size() ? name[i] : ' ';
        out[i] = static_cast<uint8_t>(static_cast<uint8_t>(c) << 1);
    }
    out[6] = static_cast<uint8_t>(0x60u | (static_cast<uint8_t>(ssid) << 1) |
                                  (last ? 0x01u : 0x00u));
    return out;
}

std::optional<Callsign> Callsign::decode(BytesView b7) {
    if (b7.size() != 7) return std::nullopt;
    Callsign cs;
    for (size_t i = 0; i < 6; ++i) {
        if (b7[i] & 0x01u) return std::nullopt; // extension bit mid-callsign
        char c = static_cast<char>(b7[i] >> 1);
        if (c < 0x20 || c > 0x7E) return std::nullopt;
        cs.name.push_back(c);
    }
    while (!cs.name.empty() && cs.name.back() == ' ') cs.name.pop_back();
    cs.ssid = static_cast<uint8_t>((b7[6] >> 1) & 0x0Fu);
    return cs;
}

Bytes MessageHeader::encode() const {
    ByteWriter w;
    w.u16(message_id);
    w.u8(total_frames);
    w.u8(frame_index);
    w.u8(static_cast<uint8_t>(kind));
    return w.take();
}

std::optional<MessageHeader> MessageHeader::decode(BytesView b) {
    ByteReader r(b);
    auto id = r.u16();
    auto total = r.u8();
    auto index = r.u8();
    auto kind = r.u8();
    if (!id || !total || !index || !kind) return std::nullopt;
    if (*total == 0 || *index >= *total) return std::nullopt;
    if (*kind < 1 || *kind > 4) return std::nullopt;
    MessageHeader h;
    h.message_id = *id;
    h.total_frames = *total;
    h.frame_index = *index;
    h.kind = static_cast<MessageKind>(*kind);
    return h;
}

Bytes Ax25Frame::encode() const {
    if (info.size() > kAx25MaxInfo) {
        throw std::length_error("Ax25Frame: info field exceeds 256 bytes");
    }
    Bytes out;
    out.reserve(encoded_size());
    out.insert(out.end(), kAx25LeadingFlags, 0x7E);
    auto d = dest.encode(false);
    auto s = src.encode(true);
    out.insert(out.end(), d.begin(), d.end());
    out.insert(out.end(), s.begin(), s.end());
    out.push_back(0x03); // UI frame
    out.push_back(0xF0); // no layer-3 protocol
    out.insert(out.end(), info.begin(), info.end());
    uint16_t fcs = crc16_x25(
        BytesView(out.data() + kAx25LeadingFlags, out.size() - kAx25LeadingFlags));
    out.push_back(static_cast<uint8_t>(fcs & 0xFFu)); // low byte first
    out.push_back(static_cast<uint8_t>(fcs >> 8));
    out.push_back(0x7E);
    return out;
}

std::optional<Ax25Frame> Ax25Frame::decode(BytesView b) {
    if (b.size() < kAx25Overhead || b.size() > kAx25Overhead + kAx25MaxInfo) {
        return std::nullopt;
    }
    for (size_t i = 0; i < kAx25LeadingFlags; ++i) {
        if (b[i] != 0x7E) return std::nullopt;
    }
    if (b[b.size() - 1] != 0x7E) return std::nullopt;

    // Address through info: everything between the flags and the FCS.
    BytesView body = b.subspan(kAx25LeadingFlags, b.size() - kAx25LeadingFlags - 3);
    uint16_t fcs_rx = static_cast<uint16_t>(b[b.size() - 3]) |
                      static_cast<uint16_t>(b[b.size() - 2]) << 8;
    if (crc16_x25(body) != fcs_rx) return std::nullopt;

    auto dest = Callsign::decode(body.subspan(0, 7));
    auto src = Callsign::decode(body.subspan(7, 7));
    if (!dest || !src) return std::nullopt;
    if (body[14] != 0x03 || body[15] != 0xF0) return std::nullopt;

    Ax25Frame frame;
    frame.dest = std::move(*dest);
    frame.src = std::move(*src);
    frame.info.assign(body.begin() + 16, body.end());
    return frame;
}

BytesView Ax25Frame::data() const {
    if (info.size() < kMessageHeaderSize) return {};
    return BytesView(info.data() + kMessageHeaderSize,
                     info.size() - kMessageHeaderSize);
}

std::vector<Ax25Frame> fragment(const Callsign& dest, const Callsign& src,
                                uint16_t message_id, MessageKind kind,
                                BytesView payload) {
    if (payload.size() > kMaxFragmentPayload) {
        throw SizeError("fragment: payload exceeds 251 * 255 bytes");
    }
    size_t count =
        payload.empty() ? 1 : (payload.size() + kMaxFrameData - 1) / kMaxFrameData;
    std::vector<Ax25Frame> frames;
    frames.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        size_t offset = i * kMaxFrameData;
        size_t len = std::min(kMaxFrameData, payload.size() - offset);
        MessageHeader header;
        header.message_id = message_id;
        header.total_frames = static_cast<uint8_t>(count);
        header.frame_index = static_cast<uint8_t>(i);
        header.kind = kind;
        Ax25Frame frame;
        frame.dest = dest;
        frame.src = src;
        frame.info = header.encode();
        BytesView slice = payload.subspan(offset, len);
        frame.info.insert(frame.info.end(), slice.begin(), slice.end());
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::optional<ReassembledMessage> Reassembler::accept(const Ax25Frame& frame) {
    auto header = frame.header();
    if (!header) return std::nullopt;
    auto key = std::make_pair(frame.src, header->message_id);
    Partial& partial = partials_[key];
    if (partial.pieces.empty()) {
        partial.total_frames = header->total_frames;
        partial.kind = header->kind;
    } else if (partial.total_frames != header->total_frames ||
               partial.kind != header->kind) {
        return std::nullopt; // inconsistent with fragments already held
    }
    BytesView data = frame.data();
    partial.pieces[header->frame_index] = Bytes(data.begin(), data.end());
    if (partial.pieces.size() < partial.total_frames) return std::nullopt;

    ReassembledMessage message;
    message.src = frame.src;
    message.message_id = header->message_id;
    message.kind = partial.kind;
    for (const auto& [index, piece] : partial.pieces) {
        message.payload.insert(message.payload.end(), piece.begin(), piece.end());
    }
    partials_.erase(key);
    return message;
}

std::optional<ReassembledMessage> reassemble(const std::vector<Ax25Frame>& frames) {
    Reassembler reassembler;
    for (const auto& frame : frames) {
        if (auto message = reassembler.accept(frame)) {
            return message;
        }
    }
    return std::nullopt;
}

} // namespace spacehsm
