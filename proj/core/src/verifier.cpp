#include "memattest/verifier.hpp"

#include <json.hpp>

#include "memattest/error.hpp"

namespace memattest {

const char* to_string(VerdictReason reason) {
    switch (reason) {
    case VerdictReason::Uncompromised: return "uncompromised";
    case VerdictReason::Timeout: return "timeout";
    case VerdictReason::NonceMismatch: return "nonce-mismatch";
    case VerdictReason::SignatureInvalid: return "signature-invalid";
    case VerdictReason::DecryptionFailure: return "decryption-failure";
    case VerdictReason::PcrMismatch: return "pcr-mismatch";
    case VerdictReason::MeasurementThresholdExceeded: return "measurement-threshold-exceeded";
    case VerdictReason::MalformedResponse: return "malformed-response";
    case VerdictReason::MissingResponse: return "missing-response";
    }
    return "unknown";
}

std::string AttestationReport::to_json() const {
    nlohmann::json j;
    j["prover_id"] = prover_id;
    j["verdict"] = verdict.uncompromised() ? "uncompromised" : "compromised";
    j["reason"] = to_string(verdict.reason);
    j["mce_count"] = verdict.mce_count;
    j["abo_count"] = verdict.abo_count;
    j["elapsed_ms"] = elapsed_ms;
    return j.dump();
}

HeuristicResult evaluate_heuristic(const std::vector<Measurement>& measurements,
                                   uint64_t mce_limit, uint64_t abo_limit) {
    HeuristicResult r;
    for (const auto& m : measurements) {
        if (m.is_mce()) {
            ++r.mce_count;
        } else {
            ++r.abo_count;
        }
    }
    r.compromised = r.mce_count >= mce_limit || r.abo_count >= abo_limit;
    return r;
}

PcrValue recompute_pcr(const Bytes32& secret, const std::vector<Bytes>& canonical_measurements) {
    PcrValue acc{}; // reset value: 32 zero bytes
    acc = sha256_concat(acc, Bytes(secret.begin(), secret.end()));
    for (const auto& m : canonical_measurements) {
        acc = sha256_concat(acc, m);
    }
    return acc;
}

Verifier::Verifier(VerifierConfig config)
    : config_(config), keypair_(RsaKeyPair::generate()) {
    if (config_.timeout.count() <= 0) {
        throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
    }
}

void Verifier::register_prover(const std::string& prover_id, const Bytes& tpm_pub_der) {
    auto key = RsaPublicKey::from_der(tpm_pub_der);
    std::lock_guard lock(mutex_);
    tpm_pubs_.insert_or_assign(prover_id, std::move(key));
}

bool Verifier::knows_prover(const std::string& prover_id) const {
    std::lock_guard lock(mutex_);
    return tpm_pubs_.contains(prover_id);
}

Bytes32 Verifier::provision_secret(const std::string& prover_id, uint64_t boot_id) {
    std::lock_guard lock(mutex_);
    uint64_t& max_issued = max_issued_boot_id_[prover_id];
    if (boot_id <= max_issued) {
        throw Error(ErrorCode::BootIdReuse,
                    "boot_id " + std::to_string(boot_id) + " not after " +
                        std::to_string(max_issued) + " for " + prover_id);
    }
    max_issued = boot_id;
    Bytes32 secret = random_bytes32();
    secrets_.emplace(std::make_pair(prover_id, boot_id), secret);
    return secret;
}

Challenge Verifier::issue_challenge(const std::string& prover_id, TimePoint now) {
    std::lock_guard lock(mutex_);
    if (!tpm_pubs_.contains(prover_id)) {
        throw Error(ErrorCode::UnknownProver, prover_id);
    }
    Challenge ch;
    ch.nonce = random_bytes32();
    ch.t_s = now;
    ch.prover_id = prover_id;
    outstanding_.emplace(ch.nonce, ch);
    return ch;
}

std::optional<TimePoint> Verifier::challenge_sent_at(const Bytes32& nonce) const {
    std::lock_guard lock(mutex_);
    auto it = outstanding_.find(nonce);
    if (it == outstanding_.end()) return std::nullopt;
    return it->second.t_s;
}

Verdict Verifier::process_malformed(const std::optional<Bytes32>& nonce_hint) {
    if (nonce_hint) {
        std::lock_guard lock(mutex_);
        outstanding_.erase(*nonce_hint);
    }
    return Verdict{VerdictReason::MalformedResponse};
}

Verdict Verifier::process_response(const AttestationResponse& response, TimePoint t_r) {
    // 1. Well-formedness beyond parsing: log-size cap and record shape.
    //    Oversized logs are treated as hostile input, not as evidence.
    if (response.records.size() > config_.max_log_records) {
        return process_malformed(response.nonce);
    }
    for (const auto& r : response.records) {
        if (r.ciphertext.empty() || r.ciphertext.size() > 64 * 1024) {
            return process_malformed(response.nonce);
        }
    }

    // 2. The nonce must be one we are waiting on. It is consumed now, no
    //    matter how the remaining checks go.
    Challenge challenge;
    const RsaPublicKey* tpm_pub = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto it = outstanding_.find(response.nonce);
        if (it == outstanding_.end()) {
            return Verdict{VerdictReason::NonceMismatch};
        }
        challenge = it->second;
        outstanding_.erase(it);
        auto key_it = tpm_pubs_.find(challenge.prover_id);
        if (key_it == tpm_pubs_.end()) {
            return Verdict{VerdictReason::NonceMismatch};
        }
        tpm_pub = &key_it->second;
    }

    // 3. Round-trip time against t_T.
    if (t_r - challenge.t_s > config_.timeout) {
        return Verdict{VerdictReason::Timeout};
    }

    // 4. TPM signature over (PCR || nonce).
    if (!verify_quote(*tpm_pub, response.pcr_value, response.nonce, response.signature)) {
        return Verdict{VerdictReason::SignatureInvalid};
    }

    // 5. Decrypt every record; a record that decrypts but does not parse as
    //    a measurement is equally a tamper signal.
    std::vector<Bytes> canonical;
    std::vector<Measurement> measurements;
    canonical.reserve(response.records.size());
    measurements.reserve(response.records.size());
    for (const auto& r : response.records) {
        try {
            Bytes plain = keypair_.decrypt(r.ciphertext);
            measurements.push_back(canonical_decode(plain));
            canonical.push_back(std::move(plain));
        } catch (const Error&) {
            return Verdict{VerdictReason::DecryptionFailure};
        }
    }

    // 6. Recompute the chain from the boot secret; PCR_Calc must equal
    //    PCR_Rec. An unknown (prover, boot) pair has no secret we ever
    //    issued, so no recomputation can match.
    Bytes32 secret{};
    {
        std::lock_guard lock(mutex_);
        auto it = secrets_.find({challenge.prover_id, response.boot_id});
        if (it == secrets_.end()) {
            return Verdict{VerdictReason::PcrMismatch};
        }
        secret = it->second;
    }
    if (recompute_pcr(secret, canonical) != response.pcr_value) {
        return Verdict{VerdictReason::PcrMismatch};
    }

    // 7. The counting heuristic over the now-trusted measurements.
    HeuristicResult h = evaluate_heuristic(measurements, config_.mce_limit, config_.abo_limit);
    Verdict v;
    v.mce_count = h.mce_count;
    v.abo_count = h.abo_count;
    v.reason = h.compromised ? VerdictReason::MeasurementThresholdExceeded
                             : VerdictReason::Uncompromised;
    return v;
}

std::optional<Verdict> Verifier::expire_challenge(const Bytes32& nonce, TimePoint now) {
    std::lock_guard lock(mutex_);
    auto it = outstanding_.find(nonce);
    if (it == outstanding_.end()) {
        throw Error(ErrorCode::UnknownNonce, "no outstanding challenge for this nonce");
    }
    if (now - it->second.t_s > config_.timeout) {
        outstanding_.erase(it);
        return Verdict{VerdictReason::MissingResponse};
    }
    return std::nullopt;
}

int verdict_exit_code(const Verdict& verdict) {
    switch (verdict.reason) {
    case VerdictReason::Uncompromised: return 0;
    case VerdictReason::MeasurementThresholdExceeded: return 10;
    case VerdictReason::Timeout: return 11;
    case VerdictReason::NonceMismatch: return 12;
    case VerdictReason::SignatureInvalid: return 13;
    case VerdictReason::PcrMismatch: return 14;
    case VerdictReason::MalformedResponse:
    case VerdictReason::MissingResponse: return 15;
    case VerdictReason::DecryptionFailure: return 16;
    }
    return 1;
}

} // namespace memattest
