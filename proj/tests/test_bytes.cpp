// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "spacehsm/bytes.hpp"

using namespace spacehsm;

TEST_CASE("hex encoding is lowercase and round-trips") {
    Bytes data = {0x00, 0x01, 0x7f, 0x80, 0xab, 0xcd, 0xef, 0xff};
    std::string hex = hex_encode(BytesView(data.data(), data.size()));
    CHECK(hex == "00017f80abcdefff");
    auto back = hex_decode(hex);
    REQUIRE(back.has_value());
    CHECK(*back == data);
}

TEST_CASE("hex decoding rejects malformed input") {
    CHECK_FALSE(hex_decode("abc").has_value());   // odd length
    CHECK_FALSE(hex_decode("zz").has_value());    // non-hex digit
    CHECK_FALSE(hex_decode("AB cd").has_value()); // embedded space
    auto empty = hex_decode("");
    REQUIRE(empty.has_value());
    CHECK(empty->empty());
}

TEST_CASE("hex decoding accepts uppercase") {
    auto upper = hex_decode("ABCDEF");
    REQUIRE(upper.has_value());
    CHECK(*upper == Bytes{0xab, 0xcd, 0xef});
}

TEST_CASE("base64 round-trips all lengths 0..257") {
    Bytes data;
    for (size_t n = 0; n <= 257; ++n) {
        std::string b64 = base64_encode(BytesView(data.data(), data.size()));
        auto back = base64_decode(b64);
        REQUIRE(back.has_value());
        CHECK(*back == data);
        data.push_back(static_cast<uint8_t>(n * 37 + 11));
    }
}

TEST_CASE("base64 known vectors") {
    // RFC 4648 test vectors.
    auto enc = [](std::string_view s) {
        return base64_encode(BytesView(
            reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foob") == "Zm9vYg==");
    CHECK(enc("fooba") == "Zm9vYmE=");
    CHECK(enc("foobar") == "Zm9vYmFy");
}

TEST_CASE("base64 rejects malformed input") {
    CHECK_FALSE(base64_decode("Zg=").has_value());
    CHECK_FALSE(base64_decode("Z!==").has_value());
    CHECK_FALSE(base64_decode("Zg===").has_value());
}

TEST_CASE("byte writer emits big-endian integers") {
    ByteWriter w;
    w.u8(0x01);
    w.u16(0x0203);
    w.u32(0x04050607);
    w.u64(0x08090a0b0c0d0e0fULL);
    Bytes out = w.take();
    Bytes expected = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07,
                      0x08, 0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f};
    CHECK(out == expected);
}
