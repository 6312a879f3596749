#pragma once

#include <stdexcept>
#include <string>

namespace memattest {

enum class ErrorCode {
    InvalidConfig,
    AddressOutOfRange,
    StateViolation,
    TraceError,
    InfeasibleParams,
    NotInitialized,
    DoubleAbsorb,
    ReplayRejected,
    BootIdReuse,
    UnknownProver,
    UnknownNonce,
    EmptyData,
    IndexOutOfRange,
    PlaintextTooLarge,
    DecryptionFailure,
    CryptoFailure,
    StorageFailure,
    FrameTooLarge,
    MalformedJson,
    UnknownType,
    UnknownVersion,
    ConnectionFailure,
    HandshakeFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace memattest
