#include "memattest/prover.hpp"

#include <openssl/crypto.h>

#include "memattest/error.hpp"

namespace memattest {

Prover::Prover(std::string prover_id, RsaPublicKey verifier_encryption_pub,
               uint32_t attestation_pcr_index)
    : prover_id_(std::move(prover_id)), verifier_pub_(std::move(verifier_encryption_pub)),
      tpm_(attestation_pcr_index) {}

SecretRequest Prover::boot() {
    std::lock_guard lock(gate_);
    boot_id_ = tpm_.reset();
    log_.clear();
    seen_nonces_.clear();
    seen_order_.clear();
    next_sequence_no_ = 1;
    secret_absorbed_ = false;
    return SecretRequest{prover_id_, boot_id_};
}

void Prover::absorb_secret(const Bytes32& secret) {
    std::lock_guard lock(gate_);
    if (boot_id_ == 0) {
        throw Error(ErrorCode::NotInitialized, "absorb_secret before boot");
    }
    if (secret_absorbed_) {
        throw Error(ErrorCode::DoubleAbsorb, "secret already absorbed this boot");
    }
    Bytes buf(secret.begin(), secret.end());
    tpm_.pcr_extend(tpm_.attestation_pcr_index(), buf);
    OPENSSL_cleanse(buf.data(), buf.size()); // the secret must not outlive the extend
    secret_absorbed_ = true;
}

void Prover::require_initialized() const {
    if (!secret_absorbed_) {
        throw Error(ErrorCode::NotInitialized, "no boot secret absorbed yet");
    }
}

void Prover::record_locked(const Measurement& m) {
    // Everything happens inside the gate: the ciphertext must enter the log
    // in the same critical section as the extend that covers it, or a
    // concurrent quote could see a PCR that ran ahead of the snapshot.
    require_initialized();
    Bytes canonical = canonical_encode(m);
    EncryptedRecord record{verifier_pub_.encrypt(canonical)};
    tpm_.pcr_extend(tpm_.attestation_pcr_index(), canonical);
    log_.append(record);
    if (m.sequence_no >= next_sequence_no_) {
        next_sequence_no_ = m.sequence_no + 1;
    }
}

void Prover::record_measurement(const Measurement& m) {
    std::lock_guard lock(gate_);
    record_locked(m);
}

void Prover::record_mce(const McePayload& payload, uint64_t timestamp_ms) {
    std::lock_guard lock(gate_);
    Measurement m;
    m.sequence_no = next_sequence_no_;
    m.timestamp_ms = timestamp_ms;
    m.payload = payload;
    record_locked(m);
}

void Prover::record_abo(const AboAlertEvent& alert, uint64_t timestamp_ms) {
    std::lock_guard lock(gate_);
    Measurement m;
    m.sequence_no = next_sequence_no_;
    m.timestamp_ms = timestamp_ms;
    m.payload = AboPayload{alert.addr, alert.counter_value};
    record_locked(m);
}

Evidence Prover::handle_challenge(const Bytes32& nonce) {
    std::lock_guard lock(gate_);
    require_initialized();
    if (seen_nonces_.contains(nonce)) {
        throw Error(ErrorCode::ReplayRejected, "nonce already answered this boot");
    }
    seen_nonces_.insert(nonce);
    seen_order_.push_back(nonce);
    if (seen_order_.size() > kSeenNonceCap) {
        seen_nonces_.erase(seen_order_.front());
        seen_order_.pop_front();
    }

    Quote q = tpm_.quote(tpm_.attestation_pcr_index(), nonce);
    Evidence ev;
    ev.nonce = nonce;
    ev.pcr_value = q.pcr_value;
    ev.signature = q.signature;
    ev.encrypted_log = log_.snapshot();
    ev.boot_id = boot_id_;
    return ev;
}

void Prover::ingest_scenario(const Scenario& scenario, const DramConfig& dram) {
    {
        std::lock_guard lock(gate_);
        require_initialized();
    }
    Simulator sim(dram);
    size_t next_mce = 0;
    auto flush_mces_through = [&](uint64_t step) {
        while (next_mce < scenario.mce_events.size() &&
               scenario.mce_events[next_mce].at_step <= step) {
            record_mce(scenario.mce_events[next_mce].payload,
                       scenario.mce_events[next_mce].at_step);
            ++next_mce;
        }
    };

    for (size_t i = 0; i < scenario.trace.size(); ++i) {
        flush_mces_through(i); // ties at a step: the MCE is observed first
        for (const auto& alert : sim.step(scenario.trace[i])) {
            record_abo(alert, alert.step_index);
        }
    }
    flush_mces_through(UINT64_MAX);
}

size_t Prover::log_size() const {
    std::lock_guard lock(gate_);
    return log_.size();
}

std::string Prover::debug_state() const {
    std::lock_guard lock(gate_);
    std::string out = "prover_id=" + prover_id_ + "\nboot_id=" + std::to_string(boot_id_) +
                      "\nsecret_absorbed=" + (secret_absorbed_ ? "1" : "0") +
                      "\nnext_sequence_no=" + std::to_string(next_sequence_no_) + "\ntpm=" +
                      tpm_.public_state_json() + "\nverifier_pub=" +
                      base64_encode(verifier_pub_.to_der()) + "\nrecords=";
    for (const auto& r : log_.snapshot()) {
        out += hex_encode(r.ciphertext);
        out += ',';
    }
    out += "\nnonces=";
    for (const auto& n : seen_nonces_) {
        out += hex_encode(n);
        out += ',';
    }
    return out;
}

} // namespace memattest
