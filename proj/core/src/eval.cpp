#include "memattest/eval.hpp"

#include <algorithm>
#include <json.hpp>
#include <thread>

#include "memattest/error.hpp"
#include "memattest/rng.hpp"

namespace memattest {

namespace {

// Seeded victim placement away from the bank edge, so aggressor pairs never
// need boundary shifts in the default experiment.
RowAddress derive_victim(const DramConfig& dram, uint64_t seed) {
    RowAddress v;
    v.rank = uint32_t(seed % dram.ranks);
    v.bank = uint32_t((seed >> 8) % dram.banks_per_rank);
    uint32_t margin = std::min<uint32_t>(8, dram.rows_per_bank / 4);
    uint32_t span = std::max<uint32_t>(1, dram.rows_per_bank - 2 * margin);
    v.row = margin + uint32_t((seed >> 16) % span);
    return v;
}

} // namespace

bool eval_run_is_benign(const EvalConfig& config, uint64_t run_index) {
    return run_index < config.n_benign;
}

PatternParams eval_run_params(const EvalConfig& config, uint64_t run_index) {
    uint64_t run_seed = split_seed(config.seed, run_index);
    PatternParams params;
    if (eval_run_is_benign(config, run_index)) {
        params = config.benign_template;
        // The template count caps the per-run draw: 0..count benign MCEs.
        params.injected_mce_count =
            uint32_t(run_seed % (uint64_t(config.benign_template.injected_mce_count) + 1));
    } else {
        switch ((run_index - config.n_benign) % 3) {
        case 0: params = config.double_sided_template; break;
        case 1: params = config.many_sided_template; break;
        default: params = config.ecc_template; break;
        }
        params.victim = derive_victim(config.dram, run_seed);
    }
    params.seed = run_seed;
    return params;
}

ConfusionMatrix run_eval(const EvalConfig& config) {
    if (config.n_benign < 1 || config.n_malicious < 1) {
        throw Error(ErrorCode::InvalidConfig, "n_benign and n_malicious must be >= 1");
    }
    config.dram.validate();

    uint64_t total = config.n_benign + config.n_malicious;
    unsigned workers = config.workers;
    if (workers == 0) {
        workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    }
    workers = unsigned(std::min<uint64_t>(workers, total));

    std::vector<RunRecord> records(total);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);

    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                VerifierConfig vcfg;
                vcfg.timeout = config.timeout;
                Verifier verifier(vcfg);
                Prover prover("eval-prover-" + std::to_string(w),
                              verifier.encryption_public_key());
                verifier.register_prover(prover.id(), prover.tpm_public_key_der());

                for (uint64_t i = w; i < total; i += workers) {
                    PatternParams params = eval_run_params(config, i);
                    Scenario scenario = generate(params, config.dram);
                    eval_reset(prover, verifier);
                    prover.ingest_scenario(scenario, config.dram);
                    AttestationReport report =
                        attest_round(verifier, prover, TransportKind::Loopback);

                    RunRecord rec;
                    rec.run_index = i;
                    rec.seed = params.seed;
                    rec.kind = params.kind;
                    rec.label = scenario.label;
                    rec.verdict = report.verdict;
                    records[i] = rec;
                }
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    ConfusionMatrix matrix;
    matrix.runs = std::move(records);
    for (const auto& rec : matrix.runs) {
        bool flagged = !rec.verdict.uncompromised();
        if (rec.label == ScenarioLabel::Benign) {
            flagged ? ++matrix.false_positive : ++matrix.true_negative;
        } else {
            flagged ? ++matrix.true_positive : ++matrix.false_negative;
        }
    }
    return matrix;
}

std::string ConfusionMatrix::to_json() const {
    nlohmann::json j;
    j["true_negative"] = true_negative;
    j["false_positive"] = false_positive;
    j["false_negative"] = false_negative;
    j["true_positive"] = true_positive;
    j["runs"] = nlohmann::json::array();
    for (const auto& rec : runs) {
        j["runs"].push_back({{"run", rec.run_index},
                             {"seed", rec.seed},
                             {"kind", to_string(rec.kind)},
                             {"label", to_string(rec.label)},
                             {"verdict", rec.verdict.uncompromised() ? "uncompromised"
                                                                     : "compromised"},
                             {"reason", to_string(rec.verdict.reason)},
                             {"mce_count", rec.verdict.mce_count},
                             {"abo_count", rec.verdict.abo_count}});
    }
    return j.dump(2);
}

std::string ConfusionMatrix::summary() const {
    uint64_t benign = true_negative + false_positive;
    uint64_t malicious = true_positive + false_negative;
    std::string out;
    out += "benign runs:    " + std::to_string(benign) + " (TN " + std::to_string(true_negative) +
           ", FP " + std::to_string(false_positive) + ")\n";
    out += "malicious runs: " + std::to_string(malicious) + " (TP " +
           std::to_string(true_positive) + ", FN " + std::to_string(false_negative) + ")\n";
    return out;
}

} // namespace memattest
