#include "memattest/error.hpp"

namespace memattest {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::AddressOutOfRange: return "address-out-of-range";
    case ErrorCode::StateViolation: return "state-violation";
    case ErrorCode::TraceError: return "trace-error";
    case ErrorCode::InfeasibleParams: return "infeasible-params";
    case ErrorCode::NotInitialized: return "not-initialized";
    case ErrorCode::DoubleAbsorb: return "double-absorb";
    case ErrorCode::ReplayRejected: return "replay-rejection";
    case ErrorCode::BootIdReuse: return "boot-id-reuse";
    case ErrorCode::UnknownProver: return "unknown-prover";
    case ErrorCode::UnknownNonce: return "unknown-nonce";
    case ErrorCode::EmptyData: return "empty-data";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::PlaintextTooLarge: return "plaintext-too-large";
    case ErrorCode::DecryptionFailure: return "decryption-failure";
    case ErrorCode::CryptoFailure: return "crypto-failure";
    case ErrorCode::StorageFailure: return "storage-failure";
    case ErrorCode::FrameTooLarge: return "frame-too-large";
    case ErrorCode::MalformedJson: return "malformed-json";
    case ErrorCode::UnknownType: return "unknown-type";
    case ErrorCode::UnknownVersion: return "unknown-version";
    case ErrorCode::ConnectionFailure: return "connection-failure";
    case ErrorCode::HandshakeFailure: return "handshake-failure";
    }
    return "unknown-error";
}

} // namespace memattest
