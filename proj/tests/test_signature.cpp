// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "doctest.h"
#include "spacehsm/bytes.hpp"
#include "spacehsm/hash.hpp"
#include "spacehsm/signature.hpp"

using namespace spacehsm;

namespace {

Bytes from_hex(const std::string& hex) {
    auto b = hex_decode(hex);
    REQUIRE(b.has_value());
    return *b;
}

} // namespace

TEST_CASE("ed25519 matches the published deterministic test vector") {
    // RFC 8032 section 7.1, TEST 1: empty message.
    Bytes seed = from_hex(
        "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
    KeyPair kp = KeyPair::generate(SignatureScheme::Ed25519,
                                   BytesView(seed.data(), seed.size()));
    CHECK(hex_encode(BytesView(kp.public_key.data(), kp.public_key.size())) ==
          "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
    Bytes sig = sign(kp, BytesView());
    CHECK(hex_encode(BytesView(sig.data(), sig.size())) ==
          "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
          "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
    CHECK(verify(SignatureScheme::Ed25519,
                 BytesView(kp.public_key.data(), kp.public_key.size()),
                 BytesView(), BytesView(sig.data(), sig.size())));
}

TEST_CASE("ed25519 vector with a one-byte message") {
    // RFC 8032 section 7.1, TEST 2.
    Bytes seed = from_hex(
        "4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb");
    KeyPair kp = KeyPair::generate(SignatureScheme::Ed25519,
                                   BytesView(seed.data(), seed.size()));
    CHECK(hex_encode(BytesView(kp.public_key.data(), kp.public_key.size())) ==
          "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c");
    Bytes msg = {0x72};
    Bytes sig = sign(kp, BytesView(msg.data(), msg.size()));
    CHECK(hex_encode(BytesView(sig.data(), sig.size())) ==
          "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
          "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00");
}

TEST_CASE("signature sizes and scheme names") {
    CHECK(signature_size(SignatureScheme::Ed25519) == 64);
    CHECK(signature_size(SignatureScheme::Ed25519Pad256) == 256);
    CHECK(scheme_name(SignatureScheme::Ed25519) == std::string("ed25519"));
    CHECK(scheme_name(SignatureScheme::Ed25519Pad256) ==
          std::string("ed25519-pad256"));
    CHECK(scheme_from_name("ed25519") == SignatureScheme::Ed25519);
    CHECK(scheme_from_name("ed25519-pad256") == SignatureScheme::Ed25519Pad256);
    CHECK_FALSE(scheme_from_name("rsa-2048").has_value());
}

TEST_CASE("padded scheme produces a 256-byte signature with a bound tail") {
    Digest seed = sha256(BytesView());
    KeyPair kp = KeyPair::generate(SignatureScheme::Ed25519Pad256, seed.view());
    std::string text = "padded signature scheme";
    BytesView msg(reinterpret_cast<const uint8_t*>(text.data()), text.size());
    Bytes sig = sign(kp, msg);
    REQUIRE(sig.size() == 256);
    CHECK(verify(SignatureScheme::Ed25519Pad256,
                 BytesView(kp.public_key.data(), kp.public_key.size()), msg,
                 BytesView(sig.data(), sig.size())));

    // The padding is derived from the core signature: block i is the hash of
    // core || byte(i), so the whole 256 bytes are a deterministic function of
    // the message and key.
    Bytes block0_input(sig.begin(), sig.begin() + 64);
    block0_input.push_back(0);
    Digest block0 = sha256(BytesView(block0_input.data(), block0_input.size()));
    CHECK(std::equal(block0.bytes.begin(), block0.bytes.end(),
                     sig.begin() + 64));

    // Any single corrupted byte anywhere in the signature breaks it,
    // including in the padding region.
    for (size_t pos = 0; pos < sig.size(); pos += 17) {
        Bytes bad = sig;
        bad[pos] ^= 0x01;
        CHECK_FALSE(verify(SignatureScheme::Ed25519Pad256,
                           BytesView(kp.public_key.data(), kp.public_key.size()),
                           msg, BytesView(bad.data(), bad.size())));
    }

    // Wrong-length signatures are rejected outright.
    Bytes short_sig(sig.begin(), sig.begin() + 64);
    CHECK_FALSE(verify(SignatureScheme::Ed25519Pad256,
                       BytesView(kp.public_key.data(), kp.public_key.size()),
                       msg, BytesView(short_sig.data(), short_sig.size())));
}

TEST_CASE("key generation is deterministic in the seed") {
    Digest seed_a = sha256(BytesView());
    KeyPair a1 = KeyPair::generate(SignatureScheme::Ed25519Pad256, seed_a.view());
    KeyPair a2 = KeyPair::generate(SignatureScheme::Ed25519Pad256, seed_a.view());
    CHECK(a1.public_key == a2.public_key);
    CHECK(a1.private_key == a2.private_key);

    Bytes other = {0x01};
    Digest seed_b = sha256(BytesView(other.data(), other.size()));
    KeyPair b = KeyPair::generate(SignatureScheme::Ed25519Pad256, seed_b.view());
    CHECK(a1.public_key != b.public_key);
}

TEST_CASE("verification binds the message") {
    Digest seed = sha256(BytesView());
    KeyPair kp = KeyPair::generate(SignatureScheme::Ed25519, seed.view());
    Bytes msg = {1, 2, 3};
    Bytes sig = sign(kp, BytesView(msg.data(), msg.size()));
    Bytes altered = {1, 2, 4};
    CHECK_FALSE(verify(SignatureScheme::Ed25519,
                       BytesView(kp.public_key.data(), kp.public_key.size()),
                       BytesView(altered.data(), altered.size()),
                       BytesView(sig.data(), sig.size())));
}
