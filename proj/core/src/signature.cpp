// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/signature.hpp"

#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "spacehsm/hash.hpp"

namespace spacehsm {

namespace {

using PkeyPtr = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

constexpr size_t kCoreSigSize = 64;
constexpr size_t kPaddedSigSize = 256;
constexpr size_t kPadBlocks = (kPaddedSigSize - kCoreSigSize) / 32;

PkeyPtr load_private(BytesView seed) {
    EVP_PKEY* p = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                               seed.data(), seed.size());
    if (!p) throw std::runtime_error("ed25519: bad private seed");
    return PkeyPtr(p, EVP_PKEY_free);
}

Bytes ed25519_sign(BytesView seed, BytesView message) {
    PkeyPtr key = load_private(seed);
    MdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
        throw std::runtime_error("ed25519: sign init failed");
    }
    size_t sig_len = kCoreSigSize;
    Bytes sig(sig_len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(), message.size()) != 1) {
        throw std::runtime_error("ed25519: sign failed");
    }
    sig.resize(sig_len);
    return sig;
}

bool ed25519_verify(BytesView public_key, BytesView message, BytesView signature) {
    if (public_key.size() != 32 || signature.size() != kCoreSigSize) return false;
    EVP_PKEY* raw = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                                public_key.data(), public_key.size());
    if (!raw) return false;
    PkeyPtr key(raw, EVP_PKEY_free);
    MdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            message.data(), message.size()) == 1;
}

// Expansion blocks: SHA-256(core || block_index), concatenated.
Bytes expansion(BytesView core) {
    Bytes out;
    out.reserve(kPadBlocks * 32);
    for (uint8_t i = 0; i < kPadBlocks; ++i) {
        Bytes buf(core.begin(), core.end());
        buf.push_back(i);
        Digest d = sha256(buf);
        out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    }
    return out;
}

} // namespace

std::optional<SignatureScheme> scheme_from_name(const std::string& name) {
    if (name == "ed25519") return SignatureScheme::Ed25519;
    if (name == "ed25519-pad256") return SignatureScheme::Ed25519Pad256;
    return std::nullopt;
}

std::string scheme_name(SignatureScheme scheme) {
    switch (scheme) {
        case SignatureScheme::Ed25519: return "ed25519";
        case SignatureScheme::Ed25519Pad256: return "ed25519-pad256";
    }
    return "unknown";
}

size_t signature_size(SignatureScheme scheme) {
    return scheme == SignatureScheme::Ed25519 ? kCoreSigSize : kPaddedSigSize;
}

KeyPair KeyPair::generate(SignatureScheme scheme, BytesView seed32) {
    if (seed32.size() != 32) throw std::invalid_argument("KeyPair::generate: need a 32-byte seed");
    KeyPair kp;
    kp.scheme = scheme;
    kp.private_key.assign(seed32.begin(), seed32.end());

    PkeyPtr key = load_private(seed32);
    size_t pub_len = 32;
    kp.public_key.resize(pub_len);
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.data(), &pub_len) != 1) {
        throw std::runtime_error("ed25519: public key extraction failed");
    }
    kp.public_key.resize(pub_len);
    return kp;
}

Bytes sign(const KeyPair& key, BytesView message) {
    Bytes core = ed25519_sign(key.private_key, message);
    if (key.scheme == SignatureScheme::Ed25519) return core;
    Bytes pad = expansion(core);
    core.insert(core.end(), pad.begin(), pad.end());
    return core;
}

bool verify(SignatureScheme scheme, BytesView public_key, BytesView message,
            BytesView signature) {
    if (scheme == SignatureScheme::Ed25519) {
        return ed25519_verify(public_key, message, signature);
    }
    if (signature.size() != kPaddedSigSize) return false;
    BytesView core = signature.subspan(0, kCoreSigSize);
    Bytes expected_pad = expansion(core);
    BytesView pad = signature.subspan(kCoreSigSize);
    if (!std::equal(pad.begin(), pad.end(), expected_pad.begin(), expected_pad.end())) {
        return false;
    }
    return ed25519_verify(public_key, message, core);
}

} // namespace spacehsm
