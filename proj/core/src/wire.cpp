#include "memattest/wire.hpp"

#include <json.hpp>

#include "memattest/error.hpp"

namespace memattest {

namespace {

using nlohmann::json;

Bytes32 field_bytes32(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string()) {
        throw Error(ErrorCode::MalformedJson, std::string("missing field '") + key + "'");
    }
    return to_bytes32(base64_decode(body[key].get<std::string>()));
}

uint64_t field_u64(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_number_unsigned()) {
        throw Error(ErrorCode::MalformedJson, std::string("missing field '") + key + "'");
    }
    return body[key].get<uint64_t>();
}

std::string field_string(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string()) {
        throw Error(ErrorCode::MalformedJson, std::string("missing field '") + key + "'");
    }
    return body[key].get<std::string>();
}

json body_to_json(const WireBody& body) {
    json j;
    if (const auto* ch = std::get_if<ChallengeBody>(&body)) {
        j["nonce"] = base64_encode(ch->nonce);
        j["prover_id"] = ch->prover_id;
    } else if (const auto* resp = std::get_if<ResponseBody>(&body)) {
        j["nonce"] = base64_encode(resp->nonce);
        j["pcr"] = base64_encode(resp->pcr);
        j["signature"] = base64_encode(resp->signature);
        j["boot_id"] = resp->boot_id;
        json records = json::array();
        for (const auto& r : resp->records) records.push_back(base64_encode(r));
        j["records"] = std::move(records);
    } else if (const auto* req = std::get_if<SecretRequestBody>(&body)) {
        j["prover_id"] = req->prover_id;
        j["boot_id"] = req->boot_id;
        if (req->tpm_pub_der_b64) j["tpm_pub"] = *req->tpm_pub_der_b64;
        if (req->listen) j["listen"] = *req->listen;
    } else if (const auto* rep = std::get_if<SecretReplyBody>(&body)) {
        j["secret"] = base64_encode(rep->secret);
        if (rep->enc_pub_der_b64) j["enc_pub"] = *rep->enc_pub_der_b64;
    } else if (const auto* err = std::get_if<ErrorBody>(&body)) {
        j["code"] = err->code;
        j["message"] = err->message;
    } else if (const auto* areq = std::get_if<AttestRequestBody>(&body)) {
        j["prover_id"] = areq->prover_id;
    } else if (const auto* arep = std::get_if<AttestReportBody>(&body)) {
        j["prover_id"] = arep->prover_id;
        j["verdict"] = arep->verdict;
        j["reason"] = arep->reason;
        j["mce_count"] = arep->mce_count;
        j["abo_count"] = arep->abo_count;
        j["elapsed_ms"] = arep->elapsed_ms;
    }
    return j;
}

WireBody body_from_json(const std::string& type, const json& body) {
    if (!body.is_object()) {
        throw Error(ErrorCode::MalformedJson, "body must be an object");
    }
    if (type == "ChallengeMsg") {
        ChallengeBody b;
        b.nonce = field_bytes32(body, "nonce");
        b.prover_id = field_string(body, "prover_id");
        return b;
    }
    if (type == "ResponseMsg") {
        ResponseBody b;
        b.nonce = field_bytes32(body, "nonce");
        b.pcr = field_bytes32(body, "pcr");
        b.signature = base64_decode(field_string(body, "signature"));
        b.boot_id = field_u64(body, "boot_id");
        if (!body.contains("records") || !body["records"].is_array()) {
            throw Error(ErrorCode::MalformedJson, "missing field 'records'");
        }
        for (const auto& r : body["records"]) {
            if (!r.is_string()) {
                throw Error(ErrorCode::MalformedJson, "records must be base64 strings");
            }
            b.records.push_back(base64_decode(r.get<std::string>()));
        }
        return b;
    }
    if (type == "SecretRequestMsg") {
        SecretRequestBody b;
        b.prover_id = field_string(body, "prover_id");
        b.boot_id = field_u64(body, "boot_id");
        if (body.contains("tpm_pub")) b.tpm_pub_der_b64 = field_string(body, "tpm_pub");
        if (body.contains("listen")) b.listen = field_string(body, "listen");
        return b;
    }
    if (type == "SecretReplyMsg") {
        SecretReplyBody b;
        b.secret = field_bytes32(body, "secret");
        if (body.contains("enc_pub")) b.enc_pub_der_b64 = field_string(body, "enc_pub");
        return b;
    }
    if (type == "ErrorMsg") {
        ErrorBody b;
        b.code = field_string(body, "code");
        b.message = field_string(body, "message");
        return b;
    }
    if (type == "AttestRequestMsg") {
        AttestRequestBody b;
        b.prover_id = field_string(body, "prover_id");
        return b;
    }
    if (type == "AttestReportMsg") {
        AttestReportBody b;
        b.prover_id = field_string(body, "prover_id");
        b.verdict = field_string(body, "verdict");
        b.reason = field_string(body, "reason");
        b.mce_count = field_u64(body, "mce_count");
        b.abo_count = field_u64(body, "abo_count");
        if (!body.contains("elapsed_ms") || !body["elapsed_ms"].is_number_integer()) {
            throw Error(ErrorCode::MalformedJson, "missing field 'elapsed_ms'");
        }
        b.elapsed_ms = body["elapsed_ms"].get<int64_t>();
        return b;
    }
    throw Error(ErrorCode::UnknownType, "message type '" + type + "'");
}

} // namespace

const char* wire_type_name(const WireBody& body) {
    switch (body.index()) {
    case 0: return "ChallengeMsg";
    case 1: return "ResponseMsg";
    case 2: return "SecretRequestMsg";
    case 3: return "SecretReplyMsg";
    case 4: return "ErrorMsg";
    case 5: return "AttestRequestMsg";
    case 6: return "AttestReportMsg";
    }
    return "unknown";
}

Bytes encode(const WireMessage& msg) {
    json j;
    j["version"] = msg.version;
    j["type"] = wire_type_name(msg.body);
    j["body"] = body_to_json(msg.body);
    std::string payload = j.dump();
    if (payload.size() > kMaxFrameBytes) {
        throw Error(ErrorCode::FrameTooLarge, std::to_string(payload.size()) + " bytes");
    }
    Bytes out;
    out.reserve(payload.size() + 4);
    uint32_t n = static_cast<uint32_t>(payload.size());
    out.push_back(uint8_t(n >> 24));
    out.push_back(uint8_t(n >> 16));
    out.push_back(uint8_t(n >> 8));
    out.push_back(uint8_t(n));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

WireMessage decode(const Bytes& frame_payload) {
    if (frame_payload.size() > kMaxFrameBytes) {
        throw Error(ErrorCode::FrameTooLarge, std::to_string(frame_payload.size()) + " bytes");
    }
    json j = json::parse(frame_payload.begin(), frame_payload.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::MalformedJson, "frame payload is not a JSON object");
    }
    try {
        if (!j.contains("version") || !j["version"].is_number_unsigned()) {
            throw Error(ErrorCode::MalformedJson, "missing 'version'");
        }
        uint64_t version = j["version"].get<uint64_t>();
        if (version != kWireVersion) {
            throw Error(ErrorCode::UnknownVersion, "version " + std::to_string(version));
        }
        if (!j.contains("type") || !j["type"].is_string()) {
            throw Error(ErrorCode::MalformedJson, "missing 'type'");
        }
        if (!j.contains("body")) {
            throw Error(ErrorCode::MalformedJson, "missing 'body'");
        }
        WireMessage msg;
        msg.version = static_cast<uint32_t>(version);
        msg.body = body_from_json(j["type"].get<std::string>(), j["body"]);
        return msg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

std::optional<size_t> frame_payload_length(const Bytes& buffer) {
    if (buffer.size() < 4) return std::nullopt;
    size_t n = (size_t(buffer[0]) << 24) | (size_t(buffer[1]) << 16) | (size_t(buffer[2]) << 8) |
               size_t(buffer[3]);
    if (n > kMaxFrameBytes) {
        throw Error(ErrorCode::FrameTooLarge, std::to_string(n) + " bytes");
    }
    return n;
}

} // namespace memattest
