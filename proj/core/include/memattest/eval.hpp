#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memattest/attestation.hpp"
#include "memattest/pattern_gen.hpp"

namespace memattest {

// Knobs for the classification experiment. Per-kind templates seed each
// run's generator parameters; run-specific values (seed, victim placement,
// benign MCE draw up to the template count) are derived from the master
// seed, so the whole experiment is a pure function of this struct.
struct EvalConfig {
    uint64_t n_benign = 1000;
    uint64_t n_malicious = 1000;
    DramConfig dram;
    PatternParams benign_template{PatternKind::Benign, 5000, {0, 0, 128}, 8, 200, 8, 2, 0};
    PatternParams double_sided_template{PatternKind::DoubleSided, 1, {0, 0, 128}, 8, 200, 8, 0, 0};
    PatternParams many_sided_template{PatternKind::ManySided, 1, {0, 0, 128}, 8, 200, 8, 0, 0};
    PatternParams ecc_template{PatternKind::EccTemplating, 1, {0, 0, 128}, 8, 12, 8, 3, 0};
    uint64_t seed = 7;
    std::chrono::milliseconds timeout{10'000};
    unsigned workers = 0; // 0: pick from hardware_concurrency
};

struct RunRecord {
    uint64_t run_index = 0;
    uint64_t seed = 0;
    PatternKind kind = PatternKind::Benign;
    ScenarioLabel label = ScenarioLabel::Benign;
    Verdict verdict;
};

struct ConfusionMatrix {
    uint64_t true_negative = 0;  // benign classified uncompromised
    uint64_t false_positive = 0; // benign classified compromised
    uint64_t false_negative = 0; // malicious classified uncompromised
    uint64_t true_positive = 0;  // malicious classified compromised
    std::vector<RunRecord> runs;

    std::string to_json() const;
    std::string summary() const;
};

// Per-run parameters exactly as run_eval derives them; exposed so tests can
// reproduce a single run.
PatternParams eval_run_params(const EvalConfig& config, uint64_t run_index);
bool eval_run_is_benign(const EvalConfig& config, uint64_t run_index);

// The classification experiment: for every run, reset the prover in
// evaluation mode, provision a fresh secret, generate a scenario, ingest it
// and execute one loopback attestation. Deterministic in `config`.
ConfusionMatrix run_eval(const EvalConfig& config);

} // namespace memattest
