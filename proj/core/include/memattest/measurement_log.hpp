#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "memattest/bytes.hpp"
#include "memattest/crypto.hpp"
#include "memattest/measurement.hpp"

namespace memattest {

struct EncryptedRecord {
    Bytes ciphertext;

    bool operator==(const EncryptedRecord&) const = default;
};

// RSA-OAEP of the canonical measurement bytes under the verifier's public
// key. Randomized: encrypting the same measurement twice gives different
// ciphertexts. Oversized records are rejected here, before anything is
// hashed or stored.
EncryptedRecord encrypt_record(const Measurement& m, const RsaPublicKey& verifier_pub);
Measurement decrypt_record(const EncryptedRecord& r, const RsaKeyPair& verifier_keys);

// Decrypt to raw canonical bytes; the verifier recomputes the PCR chain over
// exactly these bytes.
Bytes decrypt_record_bytes(const EncryptedRecord& r, const RsaKeyPair& verifier_keys);

// Append-only store of encrypted records, optionally mirrored to a file as
// length-prefixed binary (4-byte big-endian length, then ciphertext).
// Single writer; snapshots are taken under the prover's logging gate.
class EncryptedLog {
public:
    EncryptedLog() = default;
    explicit EncryptedLog(std::filesystem::path backing_file); // truncates

    void append(const EncryptedRecord& r);
    std::vector<EncryptedRecord> snapshot() const { return records_; }
    size_t size() const { return records_.size(); }

    // Drops all records; a fresh boot session starts an empty log.
    void clear();

    static std::vector<EncryptedRecord> load_file(const std::filesystem::path& path);

private:
    std::vector<EncryptedRecord> records_;
    std::optional<std::filesystem::path> path_;
    std::ofstream out_;
};

} // namespace memattest
