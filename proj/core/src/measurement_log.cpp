#include "memattest/measurement_log.hpp"

#include "memattest/error.hpp"

namespace memattest {

EncryptedRecord encrypt_record(const Measurement& m, const RsaPublicKey& verifier_pub) {
    Bytes plain = canonical_encode(m);
    return EncryptedRecord{verifier_pub.encrypt(plain)};
}

Bytes decrypt_record_bytes(const EncryptedRecord& r, const RsaKeyPair& verifier_keys) {
    return verifier_keys.decrypt(r.ciphertext);
}

Measurement decrypt_record(const EncryptedRecord& r, const RsaKeyPair& verifier_keys) {
    return canonical_decode(decrypt_record_bytes(r, verifier_keys));
}

EncryptedLog::EncryptedLog(std::filesystem::path backing_file) : path_(std::move(backing_file)) {
    out_.open(*path_, std::ios::binary | std::ios::trunc);
    if (!out_) {
        throw Error(ErrorCode::StorageFailure, "cannot open log file " + path_->string());
    }
}

void EncryptedLog::append(const EncryptedRecord& r) {
    records_.push_back(r);
    if (path_) {
        uint8_t len[4] = {uint8_t(r.ciphertext.size() >> 24), uint8_t(r.ciphertext.size() >> 16),
                          uint8_t(r.ciphertext.size() >> 8), uint8_t(r.ciphertext.size())};
        out_.write(reinterpret_cast<const char*>(len), 4);
        out_.write(reinterpret_cast<const char*>(r.ciphertext.data()),
                   static_cast<std::streamsize>(r.ciphertext.size()));
        out_.flush();
        if (!out_) {
            throw Error(ErrorCode::StorageFailure, "short write to " + path_->string());
        }
    }
}

void EncryptedLog::clear() {
    records_.clear();
    if (path_) {
        out_.close();
        out_.open(*path_, std::ios::binary | std::ios::trunc);
        if (!out_) {
            throw Error(ErrorCode::StorageFailure, "cannot reopen log file " + path_->string());
        }
    }
}

std::vector<EncryptedRecord> EncryptedLog::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::StorageFailure, "cannot open log file " + path.string());
    }
    std::vector<EncryptedRecord> records;
    for (;;) {
        uint8_t len[4];
        in.read(reinterpret_cast<char*>(len), 4);
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != 4) {
            throw Error(ErrorCode::StorageFailure, "truncated length prefix in " + path.string());
        }
        size_t n = (size_t(len[0]) << 24) | (size_t(len[1]) << 16) | (size_t(len[2]) << 8) |
                   size_t(len[3]);
        EncryptedRecord r;
        r.ciphertext.resize(n);
        in.read(reinterpret_cast<char*>(r.ciphertext.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n) {
            throw Error(ErrorCode::StorageFailure, "truncated record in " + path.string());
        }
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace memattest
