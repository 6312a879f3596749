#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "memattest/bytes.hpp"
#include "memattest/crypto.hpp"

namespace memattest {

// A PCR holds exactly 32 bytes; the reset value is all zeros.
using PcrValue = Bytes32;

struct Quote {
    PcrValue pcr_value{};
    Bytes32 nonce{};
    Bytes signature; // RSA-PSS over (pcr_value || nonce)

    std::string to_json() const; // {"pcr": hex, "nonce": base64, "signature": base64}
};

// Software stand-in for the TPM surface the protocol needs: a 24-slot PCR
// bank with extend/read/reset, a monotone boot counter, and quoting under an
// internal RSA-2048 key. Extend hashes the raw measurement bytes, so a PCR is
// only ever the reset value or a hash chain over extend inputs.
//
// Deliberately NOT enforced here: who may extend what. A kernel-level
// attacker can feed arbitrary data to any PCR; the protocol's defense is the
// verifier-issued boot secret, handled by the prover.
class SoftTpm {
public:
    static constexpr size_t kPcrCount = 24;

    explicit SoftTpm(uint32_t attestation_pcr_index = 16);

    SoftTpm(SoftTpm&&) noexcept = default;
    SoftTpm& operator=(SoftTpm&&) noexcept = default;

    // PCR[index] := SHA-256(old || data); returns the new value.
    PcrValue pcr_extend(uint32_t index, const Bytes& data);

    PcrValue pcr_read(uint32_t index) const;

    // Signs (pcr[index] || nonce) with the internal key.
    Quote quote(uint32_t index, const Bytes32& nonce) const;

    // Clears every PCR to zeros, bumps and returns the boot counter.
    uint64_t reset();

    uint64_t boot_counter() const { return boot_counter_; }
    uint32_t attestation_pcr_index() const { return attestation_pcr_index_; }

    // Verify half of the internal keypair; DER, safe to publish.
    Bytes public_key_der() const { return keypair_.public_key().to_der(); }

    // Everything externally visible, as JSON. Contains no private key bits.
    std::string public_state_json() const;

private:
    void check_index(uint32_t index) const;

    std::array<PcrValue, kPcrCount> pcrs_{};
    uint32_t attestation_pcr_index_;
    uint64_t boot_counter_ = 0;
    RsaKeyPair keypair_;
};

// Signature check used by the verifier: PSS over (pcr || nonce).
bool verify_quote(const RsaPublicKey& tpm_pub, const PcrValue& pcr, const Bytes32& nonce,
                  const Bytes& signature);

} // namespace memattest
