#pragma once

// Compact FIPS 180-4 SHA-256, independent of the OpenSSL-backed production
// path. Used as the oracle for PCR-extension expectations.

#include <array>
#include <cstdint>
#include <vector>

namespace memattest::testsupport {

std::array<uint8_t, 32> reference_sha256(const std::vector<uint8_t>& data);

inline std::array<uint8_t, 32> reference_extend(const std::array<uint8_t, 32>& acc,
                                                const std::vector<uint8_t>& data) {
    std::vector<uint8_t> buf(acc.begin(), acc.end());
    buf.insert(buf.end(), data.begin(), data.end());
    return reference_sha256(buf);
}

} // namespace memattest::testsupport
