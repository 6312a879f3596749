#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "memattest/bytes.hpp"
#include "memattest/crypto.hpp"
#include "memattest/measurement_log.hpp"
#include "memattest/soft_tpm.hpp"

namespace memattest {

using TimePoint = std::chrono::steady_clock::time_point;

struct Challenge {
    Bytes32 nonce{};
    TimePoint t_s{}; // when the request went out
    std::string prover_id;
};

// Verifier-side view of an attestation response (wire ResponseMsg body).
struct AttestationResponse {
    Bytes32 nonce{};
    PcrValue pcr_value{};
    Bytes signature;
    uint64_t boot_id = 0;
    std::vector<EncryptedRecord> records;
};

enum class VerdictReason {
    Uncompromised,
    Timeout,
    NonceMismatch,
    SignatureInvalid,
    DecryptionFailure,
    PcrMismatch,
    MeasurementThresholdExceeded,
    MalformedResponse,
    MissingResponse,
};

const char* to_string(VerdictReason reason);

struct Verdict {
    VerdictReason reason = VerdictReason::Uncompromised;
    uint64_t mce_count = 0;
    uint64_t abo_count = 0;

    bool uncompromised() const { return reason == VerdictReason::Uncompromised; }
    bool operator==(const Verdict&) const = default;
};

struct AttestationReport {
    std::string prover_id;
    Verdict verdict;
    int64_t elapsed_ms = 0;

    std::string to_json() const;
};

// Counting heuristic over validated measurements: the prover passes only if
// both tallies stay under their limits.
struct HeuristicResult {
    uint64_t mce_count = 0;
    uint64_t abo_count = 0;
    bool compromised = false;
};
HeuristicResult evaluate_heuristic(const std::vector<Measurement>& measurements,
                                   uint64_t mce_limit = 3, uint64_t abo_limit = 3);

// Chain recomputation: fold SHA-256(acc || x) over [secret, m1, ..., mn]
// starting from 32 zero bytes.
PcrValue recompute_pcr(const Bytes32& secret, const std::vector<Bytes>& canonical_measurements);

struct VerifierConfig {
    std::chrono::milliseconds timeout{10'000}; // t_T
    uint64_t mce_limit = 3;
    uint64_t abo_limit = 3;
    uint64_t max_log_records = 10'000; // oversized logs count as malformed
};

// Issues challenges and per-boot secrets, and turns responses into verdicts.
// Safe for concurrent use; state is updated under one internal lock.
class Verifier {
public:
    explicit Verifier(VerifierConfig config = {});

    RsaPublicKey encryption_public_key() const { return keypair_.public_key(); }

    void register_prover(const std::string& prover_id, const Bytes& tpm_pub_der);
    bool knows_prover(const std::string& prover_id) const;

    // Fresh random secret for a new boot session. Boot ids must strictly
    // increase per prover; anything else looks like an attacker fishing for
    // a new secret and is rejected.
    Bytes32 provision_secret(const std::string& prover_id, uint64_t boot_id);

    Challenge issue_challenge(const std::string& prover_id,
                              TimePoint now = std::chrono::steady_clock::now());

    // Fixed-order checks, first failure wins:
    //   well-formed, nonce, timeout, signature, decrypt, chain, heuristic.
    // The nonce is consumed whatever the outcome.
    Verdict process_response(const AttestationResponse& response, TimePoint t_r);

    // A response that never parsed: consumes the nonce if one was recovered.
    Verdict process_malformed(const std::optional<Bytes32>& nonce_hint);

    // Gives up on an outstanding challenge once the timeout has passed.
    std::optional<Verdict> expire_challenge(const Bytes32& nonce,
                                            TimePoint now = std::chrono::steady_clock::now());

    std::optional<TimePoint> challenge_sent_at(const Bytes32& nonce) const;
    const VerifierConfig& config() const { return config_; }

private:
    VerifierConfig config_;
    RsaKeyPair keypair_; // encryption keypair; private half never leaves
    mutable std::mutex mutex_;
    std::map<std::string, RsaPublicKey> tpm_pubs_;
    std::map<std::pair<std::string, uint64_t>, Bytes32> secrets_;
    std::map<std::string, uint64_t> max_issued_boot_id_;
    std::map<Bytes32, Challenge> outstanding_;
};

// CLI exit-code mapping shared by tools and tests.
int verdict_exit_code(const Verdict& verdict);

} // namespace memattest
