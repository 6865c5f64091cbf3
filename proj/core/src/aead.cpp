// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/aead.hpp"

#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace spacehsm {

namespace {
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;
}

std::array<uint8_t, kAeadNonceSize> direction_nonce(uint8_t direction,
                                                    uint32_t sender_salt24,
                                                    uint64_t counter) {
    std::array<uint8_t, kAeadNonceSize> nonce{};
    nonce[0] = direction;
    nonce[1] = static_cast<uint8_t>(sender_salt24 >> 16);
    nonce[2] = static_cast<uint8_t>(sender_salt24 >> 8);
    nonce[3] = static_cast<uint8_t>(sender_salt24);
    for (int i = 0; i < 8; ++i) {
        nonce[4 + i] = static_cast<uint8_t>(counter >> (56 - 8 * i));
    }
    return nonce;
}

Bytes aead_seal(const Digest& key, BytesView nonce12, BytesView plaintext) {
    if (nonce12.size() != kAeadNonceSize) {
        throw std::invalid_argument("aead_seal: nonce must be 12 bytes");
    }
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
    if (!ctx ||
        EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr,
                           key.bytes.data(), nonce12.data()) != 1) {
        throw std::runtime_error("aead_seal: init failed");
    }
    Bytes out(nonce12.begin(), nonce12.end());
    out.resize(kAeadNonceSize + plaintext.size() + kAeadTagSize);

    int len = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data() + kAeadNonceSize, &len,
                          plaintext.data(), static_cast<int>(plaintext.size())) != 1) {
        throw std::runtime_error("aead_seal: encrypt failed");
    }
    int fin = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kAeadNonceSize + len, &fin) != 1) {
        throw std::runtime_error("aead_seal: final failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                            out.data() + kAeadNonceSize + plaintext.size()) != 1) {
        throw std::runtime_error("aead_seal: tag extraction failed");
    }
    return out;
}

std::optional<Bytes> aead_open(const Digest& key, BytesView envelope) {
    if (envelope.size() < kAeadOverhead) return std::nullopt;
    BytesView nonce = envelope.subspan(0, kAeadNonceSize);
    BytesView ct = envelope.subspan(kAeadNonceSize,
                                    envelope.size() - kAeadOverhead);
    BytesView tag = envelope.subspan(envelope.size() - kAeadTagSize);

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
    if (!ctx ||
        EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr,
                           key.bytes.data(), nonce.data()) != 1) {
        return std::nullopt;
    }
    Bytes out(ct.size());
    int len = 0;
    if (!ct.empty() &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.data(),
                          static_cast<int>(ct.size())) != 1) {
        return std::nullopt;
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                            const_cast<uint8_t*>(tag.data())) != 1) {
        return std::nullopt;
    }
    int fin = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) {
        return std::nullopt; // authentication failure
    }
    out.resize(static_cast<size_t>(len + fin));
    return out;
}

} // namespace spacehsm
