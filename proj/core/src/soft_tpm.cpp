#include "memattest/soft_tpm.hpp"

#include <json.hpp>

#include "memattest/error.hpp"

namespace memattest {

namespace {

Bytes quote_message(const PcrValue& pcr, const Bytes32& nonce) {
    Bytes msg(pcr.begin(), pcr.end());
    msg.insert(msg.end(), nonce.begin(), nonce.end());
    return msg;
}

} // namespace

SoftTpm::SoftTpm(uint32_t attestation_pcr_index)
    : attestation_pcr_index_(attestation_pcr_index), keypair_(RsaKeyPair::generate()) {
    check_index(attestation_pcr_index);
}

void SoftTpm::check_index(uint32_t index) const {
    if (index >= kPcrCount) {
        throw Error(ErrorCode::IndexOutOfRange, "PCR index " + std::to_string(index));
    }
}

PcrValue SoftTpm::pcr_extend(uint32_t index, const Bytes& data) {
    check_index(index);
    if (data.empty()) {
        throw Error(ErrorCode::EmptyData, "pcr_extend with empty data");
    }
    pcrs_[index] = sha256_concat(pcrs_[index], data);
    return pcrs_[index];
}

PcrValue SoftTpm::pcr_read(uint32_t index) const {
    check_index(index);
    return pcrs_[index];
}

Quote SoftTpm::quote(uint32_t index, const Bytes32& nonce) const {
    check_index(index);
    Quote q;
    q.pcr_value = pcrs_[index];
    q.nonce = nonce;
    q.signature = keypair_.sign(quote_message(q.pcr_value, nonce));
    return q;
}

uint64_t SoftTpm::reset() {
    for (auto& pcr : pcrs_) pcr.fill(0);
    return ++boot_counter_;
}

std::string SoftTpm::public_state_json() const {
    nlohmann::json j;
    j["attestation_pcr_index"] = attestation_pcr_index_;
    j["boot_counter"] = boot_counter_;
    j["public_key"] = base64_encode(public_key_der());
    nlohmann::json pcrs = nlohmann::json::array();
    for (const auto& pcr : pcrs_) pcrs.push_back(hex_encode(pcr));
    j["pcrs"] = std::move(pcrs);
    return j.dump();
}

std::string Quote::to_json() const {
    nlohmann::json j;
    j["pcr"] = hex_encode(pcr_value);
    j["nonce"] = base64_encode(nonce);
    j["signature"] = base64_encode(signature);
    return j.dump();
}

bool verify_quote(const RsaPublicKey& tpm_pub, const PcrValue& pcr, const Bytes32& nonce,
                  const Bytes& signature) {
    return tpm_pub.verify(quote_message(pcr, nonce), signature);
}

} // namespace memattest
