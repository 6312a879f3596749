#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <set>
#include <string>

#include "memattest/bytes.hpp"
#include "memattest/measurement_log.hpp"
#include "memattest/pattern_gen.hpp"
#include "memattest/soft_tpm.hpp"

namespace memattest {

struct SecretRequest {
    std::string prover_id;
    uint64_t boot_id = 0;
};

// The attestation response bundle.
struct Evidence {
    Bytes32 nonce{};
    PcrValue pcr_value{};
    Bytes signature;
    std::vector<EncryptedRecord> encrypted_log;
    uint64_t boot_id = 0;
};

// The attested system's agent. Two concurrent actors are supported: a
// measurement producer and a challenge handler. The logging gate makes
// (extend PCR + append record) atomic relative to (quote + snapshot), so an
// evidence bundle can never show a PCR that ran ahead of its log.
class Prover {
public:
    Prover(std::string prover_id, RsaPublicKey verifier_encryption_pub,
           uint32_t attestation_pcr_index = 16);

    // Reboot: TPM reset, log cleared, replay set cleared. The returned
    // request asks the verifier for this boot session's secret.
    SecretRequest boot();

    // Extends the attestation PCR with the verifier-issued secret, then
    // wipes it. Must happen once per boot, before any measurement.
    void absorb_secret(const Bytes32& secret);

    // Atomic measurement intake: hash chain first, then the encrypted log.
    void record_measurement(const Measurement& m);

    // Convenience constructors that stamp sequence number and timestamp.
    void record_mce(const McePayload& payload, uint64_t timestamp_ms);
    void record_abo(const AboAlertEvent& alert, uint64_t timestamp_ms);

    // Replay-checked challenge processing; returns the evidence bundle.
    Evidence handle_challenge(const Bytes32& nonce);

    // Replays the scenario: simulates the trace, turning ABO alerts and the
    // injected MCEs into measurements in step order (MCE first on ties).
    void ingest_scenario(const Scenario& scenario, const DramConfig& dram);

    Bytes tpm_public_key_der() const { return tpm_.public_key_der(); }
    uint64_t boot_id() const { return boot_id_; }
    size_t log_size() const;
    PcrValue attestation_pcr() const { return tpm_.pcr_read(tpm_.attestation_pcr_index()); }
    const std::string& id() const { return prover_id_; }

    // Everything the prover would persist or print; used by tests to check
    // that no secret bytes linger anywhere.
    std::string debug_state() const;

private:
    void require_initialized() const;
    void record_locked(const Measurement& m);

    std::string prover_id_;
    RsaPublicKey verifier_pub_;
    SoftTpm tpm_;
    EncryptedLog log_;
    uint64_t boot_id_ = 0;
    uint64_t next_sequence_no_ = 1;
    bool secret_absorbed_ = false;

    // Per-boot replay set, bounded; oldest nonces fall out first.
    static constexpr size_t kSeenNonceCap = 65536;
    std::set<Bytes32> seen_nonces_;
    std::deque<Bytes32> seen_order_;

    mutable std::mutex gate_; // the logging gate
};

} // namespace memattest
