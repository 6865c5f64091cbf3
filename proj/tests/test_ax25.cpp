// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "doctest.h"
#include "spacehsm/ax25.hpp"

using namespace spacehsm;

namespace {

const Callsign kGround{"GND1", 0};
const Callsign kSat{"SPHSM1", 0};

Bytes pattern_payload(size_t n) {
    Bytes payload;
    payload.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        payload.push_back(static_cast<uint8_t>((i * 7 + 3) & 0xff));
    }
    return payload;
}

} // namespace

TEST_CASE("crc16 x25 matches the standard check value") {
    std::string check = "123456789";
    CHECK(crc16_x25(BytesView(reinterpret_cast<const uint8_t*>(check.data()),
                              check.size())) == 0x906E);
}

TEST_CASE("callsigns encode to seven shifted bytes and round-trip") {
    Callsign c{"GND1", 2};
    auto wire = c.encode(false);
    // Characters are left-shifted by one; the name is space padded.
    CHECK(wire[0] == static_cast<uint8_t>('G' << 1));
    CHECK(wire[4] == static_cast<uint8_t>(' ' << 1));
    auto back = Callsign::decode(wire);
    REQUIRE(back.has_value());
    CHECK(back->name == "GND1");
    CHECK(back->ssid == 2);
}

TEST_CASE("frame overhead is exactly 35 bytes") {
    MessageHeader header{1, 1, 0, MessageKind::Request};
    Ax25Frame frame;
    frame.dest = kSat;
    frame.src = kGround;
    frame.info = header.encode();
    Bytes payload = pattern_payload(10);
    frame.info.insert(frame.info.end(), payload.begin(), payload.end());
    CHECK(frame.encoded_size() == kAx25Overhead + kMessageHeaderSize + 10);
    Bytes wire = frame.encode();
    CHECK(wire.size() == frame.encoded_size());
    auto back = Ax25Frame::decode(BytesView(wire.data(), wire.size()));
    REQUIRE(back.has_value());
    CHECK(back->dest == kSat);
    CHECK(back->src == kGround);
    CHECK(back->info == frame.info);
}

TEST_CASE("every single-bit corruption of a frame is rejected") {
    MessageHeader header{7, 1, 0, MessageKind::Response};
    Ax25Frame frame;
    frame.dest = kGround;
    frame.src = kSat;
    frame.info = header.encode();
    Bytes payload = pattern_payload(40);
    frame.info.insert(frame.info.end(), payload.begin(), payload.end());
    Bytes wire = frame.encode();
    size_t rejected = 0;
    for (size_t bit = 0; bit < wire.size() * 8; ++bit) {
        Bytes bad = wire;
        bad[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        auto decoded = Ax25Frame::decode(BytesView(bad.data(), bad.size()));
        // The CRC catches all single-bit errors in the framed region; bit
        // errors in the flag bytes break framing outright.
        if (!decoded.has_value()) ++rejected;
    }
    CHECK(rejected == wire.size() * 8);
}

TEST_CASE("a 2560-byte payload plus channel overhead fills 11 frames") {
    // 2560-byte request + 28 bytes of envelope overhead = 2588 bytes, which
    // splits into 10 full fragments of 251 and one of 78.
    Bytes payload = pattern_payload(2588);
    auto frames = fragment(kSat, kGround, 42, MessageKind::Request,
                           BytesView(payload.data(), payload.size()));
    REQUIRE(frames.size() == 11);
    size_t total_bits = 0;
    for (size_t i = 0; i < frames.size(); ++i) {
        auto header = frames[i].header();
        REQUIRE(header.has_value());
        CHECK(header->message_id == 42);
        CHECK(header->total_frames == 11);
        CHECK(header->frame_index == i);
        CHECK(header->kind == MessageKind::Request);
        total_bits += frames[i].encoded_size() * 8;
    }
    for (size_t i = 0; i + 1 < frames.size(); ++i) {
        CHECK(frames[i].encoded_size() == kAx25Overhead + 5 + kMaxFrameData);
    }
    CHECK(frames.back().encoded_size() == kAx25Overhead + 5 + 78);
    CHECK(total_bits == 24224);
}

TEST_CASE("fragmentation round-trips every payload size 0..2048") {
    for (size_t n = 0; n <= 2048; ++n) {
        Bytes payload = pattern_payload(n);
        auto frames = fragment(kSat, kGround, static_cast<uint16_t>(n),
                               MessageKind::Request,
                               BytesView(payload.data(), payload.size()));
        size_t expected_frames = n == 0 ? 1 : (n + kMaxFrameData - 1) / kMaxFrameData;
        REQUIRE(frames.size() == expected_frames);
        auto message = reassemble(frames);
        REQUIRE(message.has_value());
        CHECK(message->payload == payload);
        CHECK(message->kind == MessageKind::Request);
        CHECK(message->message_id == static_cast<uint16_t>(n));
        CHECK(message->src == kGround);
    }
}

TEST_CASE("oversized payloads are refused") {
    Bytes payload(kMaxFragmentPayload + 1, 0);
    CHECK_THROWS_AS(fragment(kSat, kGround, 1, MessageKind::Request,
                             BytesView(payload.data(), payload.size())),
                    SizeError);
}

TEST_CASE("reassembly tolerates duplicates, reordering and interleaving") {
    Bytes pa = pattern_payload(700);
    Bytes pb = pattern_payload(500);
    auto fa = fragment(kSat, kGround, 1, MessageKind::Request,
                       BytesView(pa.data(), pa.size()));
    auto fb = fragment(kSat, Callsign{"GND2", 0}, 1, MessageKind::Request,
                       BytesView(pb.data(), pb.size()));
    REQUIRE(fa.size() == 3);
    REQUIRE(fb.size() == 2);

    Reassembler rx;
    CHECK_FALSE(rx.accept(fa[2]).has_value()); // out of order
    CHECK_FALSE(rx.accept(fb[1]).has_value()); // interleaved second message
    CHECK_FALSE(rx.accept(fa[2]).has_value()); // duplicate is idempotent
    CHECK_FALSE(rx.accept(fa[0]).has_value());
    auto mb = rx.accept(fb[0]); // completes message B
    REQUIRE(mb.has_value());
    CHECK(mb->payload == pb);
    auto ma = rx.accept(fa[1]); // completes message A
    REQUIRE(ma.has_value());
    CHECK(ma->payload == pa);
    CHECK(rx.pending() == 0);
}

TEST_CASE("a frame disagreeing with its message header group is dropped") {
    Bytes pa = pattern_payload(700);
    auto fa = fragment(kSat, kGround, 9, MessageKind::Request,
                       BytesView(pa.data(), pa.size()));
    // Forge a frame with the same (src, message_id) but a different total.
    Bytes small = pattern_payload(10);
    auto forged = fragment(kSat, kGround, 9, MessageKind::Request,
                           BytesView(small.data(), small.size()));
    Reassembler rx;
    CHECK_FALSE(rx.accept(fa[0]).has_value());
    CHECK_FALSE(rx.accept(forged[0]).has_value()); // dropped, not merged
    CHECK_FALSE(rx.accept(fa[1]).has_value());
    auto done = rx.accept(fa[2]);
    REQUIRE(done.has_value());
    CHECK(done->payload == pa);
}
