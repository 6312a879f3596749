#include "memattest/config_io.hpp"

#include <json.hpp>

#include "memattest/error.hpp"

namespace memattest {

namespace {

using nlohmann::json;

json parse_object(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::MalformedJson, std::string(what) + " is not a JSON object");
    }
    return j;
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j[key].get<T>();
}

void apply_dram(DramConfig& config, const json& j) {
    take(j, "ranks", config.ranks);
    take(j, "banks_per_rank", config.banks_per_rank);
    take(j, "rows_per_bank", config.rows_per_bank);
    take(j, "abo_threshold", config.abo_threshold);
    take(j, "abo_delay_acts", config.abo_delay_acts);
    take(j, "abo_recovery_refs", config.abo_recovery_refs);
    take(j, "prerecovery_act_budget", config.prerecovery_act_budget);
    take(j, "refresh_window_acts", config.refresh_window_acts);
    take(j, "abo_act_ns", config.abo_act_ns);
    take(j, "seed", config.seed);
    config.validate();
}

void apply_pattern(PatternParams& params, const json& j) {
    if (j.contains("kind")) {
        params.kind = pattern_kind_from_string(j["kind"].get<std::string>());
    }
    take(j, "length", params.length);
    if (j.contains("victim")) {
        const auto& v = j["victim"];
        take(v, "rank", params.victim.rank);
        take(v, "bank", params.victim.bank);
        take(v, "row", params.victim.row);
    }
    take(j, "aggressor_count", params.aggressor_count);
    take(j, "hammer_reps", params.hammer_reps);
    take(j, "benign_row_cap", params.benign_row_cap);
    take(j, "injected_mce_count", params.injected_mce_count);
    take(j, "seed", params.seed);
}

} // namespace

void apply_dram_json(DramConfig& config, const std::string& json_text) {
    try {
        apply_dram(config, parse_object(json_text, "dram config"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

void apply_pattern_json(PatternParams& params, const std::string& json_text) {
    try {
        apply_pattern(params, parse_object(json_text, "pattern params"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

void apply_eval_json(EvalConfig& config, const std::string& json_text) {
    try {
        json j = parse_object(json_text, "eval config");
        take(j, "n_benign", config.n_benign);
        take(j, "n_malicious", config.n_malicious);
        take(j, "seed", config.seed);
        take(j, "workers", config.workers);
        if (j.contains("timeout_ms")) {
            config.timeout = std::chrono::milliseconds(j["timeout_ms"].get<int64_t>());
        }
        if (j.contains("dram")) apply_dram(config.dram, j["dram"]);
        if (j.contains("patterns")) {
            const auto& p = j["patterns"];
            if (p.contains("benign")) apply_pattern(config.benign_template, p["benign"]);
            if (p.contains("double-sided")) {
                apply_pattern(config.double_sided_template, p["double-sided"]);
            }
            if (p.contains("many-sided")) {
                apply_pattern(config.many_sided_template, p["many-sided"]);
            }
            if (p.contains("ecc-templating")) {
                apply_pattern(config.ecc_template, p["ecc-templating"]);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

std::string dram_config_to_json(const DramConfig& config) {
    json j;
    j["ranks"] = config.ranks;
    j["banks_per_rank"] = config.banks_per_rank;
    j["rows_per_bank"] = config.rows_per_bank;
    j["abo_threshold"] = config.abo_threshold;
    j["abo_delay_acts"] = config.abo_delay_acts;
    j["abo_recovery_refs"] = config.abo_recovery_refs;
    j["prerecovery_act_budget"] = config.prerecovery_act_budget;
    j["refresh_window_acts"] = config.refresh_window_acts;
    j["abo_act_ns"] = config.abo_act_ns;
    j["seed"] = config.seed;
    return j.dump(2);
}

} // namespace memattest
