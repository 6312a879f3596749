#pragma once

#include <memory>

#include "memattest/bytes.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace memattest {

Bytes32 sha256(const Bytes& data);
Bytes32 sha256_concat(const Bytes32& prefix, const Bytes& data);

Bytes random_bytes(size_t n);
Bytes32 random_bytes32();

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const noexcept;
};
using PkeyHandle = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;

// Verify-only half of a signing keypair (SubjectPublicKeyInfo DER).
class RsaPublicKey {
public:
    static RsaPublicKey from_der(const Bytes& der);

    RsaPublicKey(const RsaPublicKey& other);
    RsaPublicKey& operator=(const RsaPublicKey& other);
    RsaPublicKey(RsaPublicKey&&) noexcept = default;
    RsaPublicKey& operator=(RsaPublicKey&&) noexcept = default;
    ~RsaPublicKey() = default;

    Bytes to_der() const;

    // RSA-PSS with SHA-256.
    bool verify(const Bytes& message, const Bytes& signature) const;

    // RSA-OAEP with SHA-256; randomized, so equal plaintexts yield
    // distinct ciphertexts. Plaintext must fit the OAEP bound.
    Bytes encrypt(const Bytes& plaintext) const;

    size_t modulus_bytes() const;
    size_t max_plaintext_bytes() const; // modulus - 2*32 - 2 for OAEP-SHA256

private:
    friend class RsaKeyPair;
    explicit RsaPublicKey(PkeyHandle key) : key_(std::move(key)) {}
    PkeyHandle key_;
};

// RSA-2048 keypair. The private half never leaves this object: there is no
// private-key serialization anywhere in this module.
class RsaKeyPair {
public:
    static RsaKeyPair generate(int bits = 2048);

    RsaKeyPair(RsaKeyPair&&) noexcept = default;
    RsaKeyPair& operator=(RsaKeyPair&&) noexcept = default;

    RsaPublicKey public_key() const;

    Bytes sign(const Bytes& message) const;        // RSA-PSS with SHA-256
    Bytes decrypt(const Bytes& ciphertext) const;  // throws Error{DecryptionFailure}

private:
    explicit RsaKeyPair(PkeyHandle key) : key_(std::move(key)) {}
    PkeyHandle key_;
};

} // namespace memattest
