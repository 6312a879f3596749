#include "memattest/attestation.hpp"

#include <thread>

#include "memattest/error.hpp"

namespace memattest {

ResponseBody evidence_to_body(const Evidence& ev) {
    ResponseBody body;
    body.nonce = ev.nonce;
    body.pcr = ev.pcr_value;
    body.signature = ev.signature;
    body.boot_id = ev.boot_id;
    body.records.reserve(ev.encrypted_log.size());
    for (const auto& r : ev.encrypted_log) body.records.push_back(r.ciphertext);
    return body;
}

AttestationResponse body_to_response(const ResponseBody& body) {
    AttestationResponse resp;
    resp.nonce = body.nonce;
    resp.pcr_value = body.pcr;
    resp.signature = body.signature;
    resp.boot_id = body.boot_id;
    resp.records.reserve(body.records.size());
    for (const auto& r : body.records) resp.records.push_back(EncryptedRecord{r});
    return resp;
}

void prover_answer_one(Prover& prover, Session& session) {
    WireMessage msg = session.receive();
    const auto* challenge = std::get_if<ChallengeBody>(&msg.body);
    if (challenge == nullptr) {
        session.send(WireMessage{
            kWireVersion, ErrorBody{"unexpected-message",
                                    std::string("expected ChallengeMsg, got ") +
                                        wire_type_name(msg.body)}});
        return;
    }
    try {
        Evidence ev = prover.handle_challenge(challenge->nonce);
        session.send(WireMessage{kWireVersion, evidence_to_body(ev)});
    } catch (const Error& e) {
        session.send(WireMessage{kWireVersion, ErrorBody{to_string(e.code()), e.what()}});
    }
}

void prover_serve_session(Prover& prover, Session& session) {
    try {
        for (;;) prover_answer_one(prover, session);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConnectionFailure) throw;
        // peer hung up, session done
    }
}

SecretReplyBody handle_secret_request(Verifier& verifier, const SecretRequestBody& request,
                                      bool include_enc_pub) {
    if (request.tpm_pub_der_b64 && !verifier.knows_prover(request.prover_id)) {
        // First contact: accept the advertised TPM key. Later boots must
        // come from the same key via the usual registry.
        verifier.register_prover(request.prover_id,
                                 base64_decode(*request.tpm_pub_der_b64));
    }
    SecretReplyBody reply;
    reply.secret = verifier.provision_secret(request.prover_id, request.boot_id);
    if (include_enc_pub) {
        reply.enc_pub_der_b64 = base64_encode(verifier.encryption_public_key().to_der());
    }
    return reply;
}

AttestationReport verifier_attest_over_session(Verifier& verifier, const std::string& prover_id,
                                               Session& session,
                                               std::function<void(ResponseBody&)> tamper,
                                               std::chrono::milliseconds artificial_delay) {
    using clock = std::chrono::steady_clock;
    Challenge challenge = verifier.issue_challenge(prover_id);
    session.send(WireMessage{kWireVersion, ChallengeBody{challenge.nonce, prover_id}});

    // Wait a little past t_T: a response that shows up late still gets
    // processed (and fails the timeout check); silence becomes expiry.
    auto wait_budget = verifier.config().timeout + std::chrono::milliseconds{500};
    AttestationReport report;
    report.prover_id = prover_id;

    std::optional<WireMessage> msg;
    try {
        msg = session.receive_for(wait_budget);
    } catch (const Error&) {
        msg = std::nullopt; // broken frame or dead peer: no usable response
    }

    if (artificial_delay.count() > 0) {
        std::this_thread::sleep_for(artificial_delay);
    }
    TimePoint t_r = clock::now();
    report.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t_r - challenge.t_s).count();

    if (!msg) {
        auto verdict = verifier.expire_challenge(challenge.nonce, t_r);
        report.verdict = verdict.value_or(Verdict{VerdictReason::MissingResponse});
        return report;
    }
    auto* body = std::get_if<ResponseBody>(&msg->body);
    if (body == nullptr) {
        report.verdict = verifier.process_malformed(challenge.nonce);
        return report;
    }
    if (tamper) tamper(*body);
    report.verdict = verifier.process_response(body_to_response(*body), t_r);
    return report;
}

TransportKind transport_kind_from_string(const std::string& s) {
    if (s == "loopback") return TransportKind::Loopback;
    if (s == "tcp") return TransportKind::Tcp;
    if (s == "tls") return TransportKind::Tls;
    throw Error(ErrorCode::InvalidConfig, "unknown transport '" + s + "'");
}

AttestationReport attest_round(Verifier& verifier, Prover& prover, TransportKind transport,
                               std::function<void(ResponseBody&)> tamper,
                               std::chrono::milliseconds artificial_delay) {
    if (transport == TransportKind::Loopback) {
        auto [verifier_end, prover_end] = make_loopback_pair();
        std::thread prover_thread(
            [&prover, session = std::move(prover_end)] { prover_answer_one(prover, *session); });
        AttestationReport report = verifier_attest_over_session(verifier, prover.id(),
                                                                *verifier_end, std::move(tamper),
                                                                artificial_delay);
        verifier_end->close();
        prover_thread.join();
        return report;
    }

    TransportOptions options;
    options.tls = transport == TransportKind::Tls;
    auto listener = listen_tcp("127.0.0.1", 0, options);
    std::thread prover_thread([&prover, &listener] {
        auto session = listener->accept();
        prover_answer_one(prover, *session);
        session->close();
    });
    auto session = connect_tcp("127.0.0.1", listener->port(), options);
    AttestationReport report = verifier_attest_over_session(verifier, prover.id(), *session,
                                                            std::move(tamper), artificial_delay);
    session->close();
    prover_thread.join();
    listener->close();
    return report;
}

void eval_reset(Prover& prover, Verifier& verifier) {
    SecretRequest req = prover.boot();
    Bytes32 secret = verifier.provision_secret(req.prover_id, req.boot_id);
    prover.absorb_secret(secret);
}

} // namespace memattest
