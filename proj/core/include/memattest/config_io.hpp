#pragma once

#include <string>

#include "memattest/eval.hpp"

namespace memattest {

// Partial-override JSON loaders: absent fields keep their defaults.
//
// DRAM keys: ranks, banks_per_rank, rows_per_bank, abo_threshold,
//   abo_delay_acts, abo_recovery_refs, prerecovery_act_budget,
//   refresh_window_acts, abo_act_ns, seed.
// Pattern keys: kind, length, victim {rank,bank,row}, aggressor_count,
//   hammer_reps, benign_row_cap, injected_mce_count, seed.
// Eval keys: n_benign, n_malicious, seed, timeout_ms, workers, dram {...},
//   patterns {benign, double-sided, many-sided, ecc-templating}.

void apply_dram_json(DramConfig& config, const std::string& json_text);
void apply_pattern_json(PatternParams& params, const std::string& json_text);
void apply_eval_json(EvalConfig& config, const std::string& json_text);

std::string dram_config_to_json(const DramConfig& config);

} // namespace memattest
