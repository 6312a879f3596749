#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "memattest/bytes.hpp"
#include "memattest/measurement_log.hpp"
#include "memattest/verifier.hpp"

namespace memattest {

constexpr uint32_t kWireVersion = 1;
constexpr size_t kMaxFrameBytes = 16 * 1024 * 1024;

// Attestation-protocol bodies.
struct ChallengeBody {
    Bytes32 nonce{};
    std::string prover_id;
    bool operator==(const ChallengeBody&) const = default;
};

struct ResponseBody {
    Bytes32 nonce{};
    PcrValue pcr{};
    Bytes signature;
    uint64_t boot_id = 0;
    std::vector<Bytes> records;
    bool operator==(const ResponseBody&) const = default;
};

struct SecretRequestBody {
    std::string prover_id;
    uint64_t boot_id = 0;
    // Optional bootstrap fields for daemon deployments: the prover's TPM
    // verify key and the endpoint it answers challenges on.
    std::optional<std::string> tpm_pub_der_b64;
    std::optional<std::string> listen;
    bool operator==(const SecretRequestBody&) const = default;
};

struct SecretReplyBody {
    Bytes32 secret{};
    // Optional bootstrap field: the verifier's encryption public key.
    std::optional<std::string> enc_pub_der_b64;
    bool operator==(const SecretReplyBody&) const = default;
};

struct ErrorBody {
    std::string code;
    std::string message;
    bool operator==(const ErrorBody&) const = default;
};

// Operator-plane bodies: ask a running verifier to attest a prover and get
// the report back. Not part of the attestation exchange itself.
struct AttestRequestBody {
    std::string prover_id;
    bool operator==(const AttestRequestBody&) const = default;
};

struct AttestReportBody {
    std::string prover_id;
    std::string verdict; // "uncompromised" | "compromised"
    std::string reason;
    uint64_t mce_count = 0;
    uint64_t abo_count = 0;
    int64_t elapsed_ms = 0;
    bool operator==(const AttestReportBody&) const = default;
};

using WireBody = std::variant<ChallengeBody, ResponseBody, SecretRequestBody, SecretReplyBody,
                              ErrorBody, AttestRequestBody, AttestReportBody>;

struct WireMessage {
    uint32_t version = kWireVersion;
    WireBody body;

    bool operator==(const WireMessage&) const = default;
};

const char* wire_type_name(const WireBody& body);

// Frame: 4-byte big-endian payload length, then UTF-8 JSON
// {"version": 1, "type": "...", "body": {...}}. decode(encode(m)) == m.
Bytes encode(const WireMessage& msg);
WireMessage decode(const Bytes& frame_payload); // payload only, prefix stripped

// Splits one frame off a byte stream; nullopt if more bytes are needed.
// Throws Error{FrameTooLarge} if the prefix announces an oversized frame.
std::optional<size_t> frame_payload_length(const Bytes& buffer);

// Ordered, reliable, bidirectional message stream.
class Session {
public:
    virtual ~Session() = default;
    virtual void send(const WireMessage& msg) = 0;
    virtual WireMessage receive() = 0;
    // nullopt on timeout; throws Error{ConnectionFailure} on a dead peer.
    virtual std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;
};

// In-process pair with the same ordering semantics as a TCP session.
std::pair<std::unique_ptr<Session>, std::unique_ptr<Session>> make_loopback_pair();

struct TransportOptions {
    bool tls = false; // wrap the TCP stream in TLS (ephemeral self-signed cert)
};

// Listening endpoint. Construct with port 0 for an ephemeral port.
class Listener {
public:
    virtual ~Listener() = default;
    virtual std::unique_ptr<Session> accept() = 0;
    // nullopt if nothing connected within the timeout.
    virtual std::unique_ptr<Session> accept_for(std::chrono::milliseconds timeout) = 0;
    virtual uint16_t port() const = 0;
    virtual void close() = 0;
};

std::unique_ptr<Listener> listen_tcp(const std::string& host, uint16_t port,
                                     TransportOptions options = {});
std::unique_ptr<Session> connect_tcp(const std::string& host, uint16_t port,
                                     TransportOptions options = {});

} // namespace memattest
