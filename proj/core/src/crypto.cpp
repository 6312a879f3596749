#include "memattest/crypto.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include "memattest/error.hpp"

namespace memattest {

namespace {

[[noreturn]] void throw_openssl(const std::string& where) {
    unsigned long err = ERR_get_error();
    char buf[256] = {0};
    ERR_error_string_n(err, buf, sizeof(buf));
    ERR_clear_error();
    throw Error(ErrorCode::CryptoFailure, where + ": " + buf);
}

using CtxHandle = std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)>;
using MdCtxHandle = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

void setup_oaep(EVP_PKEY_CTX* ctx) {
    if (EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_OAEP_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx, EVP_sha256()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_mgf1_md(ctx, EVP_sha256()) <= 0) {
        throw_openssl("oaep setup");
    }
}

} // namespace

void EvpPkeyDeleter::operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }

Bytes32 sha256(const Bytes& data) {
    Bytes32 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw_openssl("sha256");
    }
    return out;
}

Bytes32 sha256_concat(const Bytes32& prefix, const Bytes& data) {
    Bytes buf(prefix.begin(), prefix.end());
    buf.insert(buf.end(), data.begin(), data.end());
    return sha256(buf);
}

Bytes random_bytes(size_t n) {
    Bytes out(n);
    if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
        throw_openssl("RAND_bytes");
    }
    return out;
}

Bytes32 random_bytes32() {
    Bytes32 out{};
    if (RAND_bytes(out.data(), 32) != 1) throw_openssl("RAND_bytes");
    return out;
}

RsaPublicKey::RsaPublicKey(const RsaPublicKey& other) : key_(nullptr) {
    if (other.key_) {
        EVP_PKEY_up_ref(other.key_.get());
        key_.reset(other.key_.get());
    }
}

RsaPublicKey& RsaPublicKey::operator=(const RsaPublicKey& other) {
    if (this != &other) {
        RsaPublicKey tmp(other);
        key_ = std::move(tmp.key_);
    }
    return *this;
}

RsaPublicKey RsaPublicKey::from_der(const Bytes& der) {
    const unsigned char* p = der.data();
    EVP_PKEY* key = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
    if (key == nullptr) {
        ERR_clear_error();
        throw Error(ErrorCode::CryptoFailure, "invalid public key DER");
    }
    return RsaPublicKey(PkeyHandle(key));
}

Bytes RsaPublicKey::to_der() const {
    unsigned char* buf = nullptr;
    int len = i2d_PUBKEY(key_.get(), &buf);
    if (len <= 0) throw_openssl("i2d_PUBKEY");
    Bytes out(buf, buf + len);
    OPENSSL_free(buf);
    return out;
}

size_t RsaPublicKey::modulus_bytes() const {
    return static_cast<size_t>(EVP_PKEY_get_size(key_.get()));
}

size_t RsaPublicKey::max_plaintext_bytes() const { return modulus_bytes() - 2 * 32 - 2; }

bool RsaPublicKey::verify(const Bytes& message, const Bytes& signature) const {
    MdCtxHandle md(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!md) throw_openssl("EVP_MD_CTX_new");
    EVP_PKEY_CTX* pctx = nullptr;
    if (EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, key_.get()) != 1) {
        throw_openssl("DigestVerifyInit");
    }
    if (EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) <= 0) {
        throw_openssl("pss setup");
    }
    int rc = EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(),
                              message.size());
    ERR_clear_error();
    return rc == 1;
}

Bytes RsaPublicKey::encrypt(const Bytes& plaintext) const {
    if (plaintext.size() > max_plaintext_bytes()) {
        throw Error(ErrorCode::PlaintextTooLarge,
                    std::to_string(plaintext.size()) + " bytes exceeds OAEP bound of " +
                        std::to_string(max_plaintext_bytes()));
    }
    CtxHandle ctx(EVP_PKEY_CTX_new(key_.get(), nullptr), EVP_PKEY_CTX_free);
    if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) <= 0) throw_openssl("encrypt_init");
    setup_oaep(ctx.get());
    size_t out_len = 0;
    if (EVP_PKEY_encrypt(ctx.get(), nullptr, &out_len, plaintext.data(), plaintext.size()) <= 0) {
        throw_openssl("encrypt sizing");
    }
    Bytes out(out_len);
    if (EVP_PKEY_encrypt(ctx.get(), out.data(), &out_len, plaintext.data(), plaintext.size()) <=
        0) {
        throw_openssl("encrypt");
    }
    out.resize(out_len);
    return out;
}

RsaKeyPair RsaKeyPair::generate(int bits) {
    EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(bits));
    if (key == nullptr) throw_openssl("RSA keygen");
    return RsaKeyPair(PkeyHandle(key));
}

RsaPublicKey RsaKeyPair::public_key() const {
    // Round-trip through DER so the returned object holds no private material.
    unsigned char* buf = nullptr;
    int len = i2d_PUBKEY(key_.get(), &buf);
    if (len <= 0) throw_openssl("i2d_PUBKEY");
    Bytes der(buf, buf + len);
    OPENSSL_free(buf);
    return RsaPublicKey::from_der(der);
}

Bytes RsaKeyPair::sign(const Bytes& message) const {
    MdCtxHandle md(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!md) throw_openssl("EVP_MD_CTX_new");
    EVP_PKEY_CTX* pctx = nullptr;
    if (EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, key_.get()) != 1) {
        throw_openssl("DigestSignInit");
    }
    if (EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) <= 0) {
        throw_openssl("pss setup");
    }
    size_t sig_len = 0;
    if (EVP_DigestSign(md.get(), nullptr, &sig_len, message.data(), message.size()) != 1) {
        throw_openssl("sign sizing");
    }
    Bytes sig(sig_len);
    if (EVP_DigestSign(md.get(), sig.data(), &sig_len, message.data(), message.size()) != 1) {
        throw_openssl("sign");
    }
    sig.resize(sig_len);
    return sig;
}

Bytes RsaKeyPair::decrypt(const Bytes& ciphertext) const {
    CtxHandle ctx(EVP_PKEY_CTX_new(key_.get(), nullptr), EVP_PKEY_CTX_free);
    if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) <= 0) throw_openssl("decrypt_init");
    setup_oaep(ctx.get());
    size_t out_len = 0;
    if (EVP_PKEY_decrypt(ctx.get(), nullptr, &out_len, ciphertext.data(), ciphertext.size()) <=
        0) {
        ERR_clear_error();
        throw Error(ErrorCode::DecryptionFailure, "ciphertext rejected");
    }
    Bytes out(out_len);
    if (EVP_PKEY_decrypt(ctx.get(), out.data(), &out_len, ciphertext.data(), ciphertext.size()) <=
        0) {
        ERR_clear_error();
        throw Error(ErrorCode::DecryptionFailure, "ciphertext rejected");
    }
    out.resize(out_len);
    return out;
}

} // namespace memattest
