#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memattest {

using Bytes = std::vector<uint8_t>;
using Bytes32 = std::array<uint8_t, 32>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string_raw(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(const uint8_t* data, size_t len);
std::string hex_encode(const Bytes& data);
std::string hex_encode(const Bytes32& data);

// Strict decoders: reject any malformed input instead of guessing.
Bytes hex_decode(std::string_view hex);

std::string base64_encode(const uint8_t* data, size_t len);
std::string base64_encode(const Bytes& data);
std::string base64_encode(const Bytes32& data);
Bytes base64_decode(std::string_view text);

Bytes32 to_bytes32(const Bytes& b); // errors unless b.size() == 32

} // namespace memattest
