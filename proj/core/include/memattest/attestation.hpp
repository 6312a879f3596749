#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "memattest/prover.hpp"
#include "memattest/verifier.hpp"
#include "memattest/wire.hpp"

namespace memattest {

ResponseBody evidence_to_body(const Evidence& ev);
AttestationResponse body_to_response(const ResponseBody& body);

// Prover side of one exchange: waits for a challenge, answers with evidence
// (or an ErrorMsg if the challenge is a replay / the prover is not ready).
void prover_answer_one(Prover& prover, Session& session);

// Keeps answering until the peer closes the session.
void prover_serve_session(Prover& prover, Session& session);

// Handles one provisioning request against the verifier's state. Registers
// the TPM key carried in the request for first-contact provers.
SecretReplyBody handle_secret_request(Verifier& verifier, const SecretRequestBody& request,
                                      bool include_enc_pub);

// Verifier side of one exchange over an open session to the prover:
// challenge out, response in, verdict computed. `tamper`, when set, mutates
// the response on the wire (adversary model for tests and the CLI);
// `artificial_delay` postpones t_R to exercise the timeout path.
AttestationReport verifier_attest_over_session(
    Verifier& verifier, const std::string& prover_id, Session& session,
    std::function<void(ResponseBody&)> tamper = {},
    std::chrono::milliseconds artificial_delay = std::chrono::milliseconds{0});

enum class TransportKind { Loopback, Tcp, Tls };

TransportKind transport_kind_from_string(const std::string& s);

// One full round against the given prover using a fresh session of the
// requested kind (TCP variants bind an ephemeral localhost listener).
AttestationReport attest_round(Verifier& verifier, Prover& prover, TransportKind transport,
                               std::function<void(ResponseBody&)> tamper = {},
                               std::chrono::milliseconds artificial_delay =
                                   std::chrono::milliseconds{0});

// Evaluation-mode reset: reboot the prover, provision a fresh secret for the
// new boot session, absorb it. Keeps key material, drops log and PCRs.
void eval_reset(Prover& prover, Verifier& verifier);

} // namespace memattest
