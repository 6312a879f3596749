#include "memattest/pattern_gen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "memattest/error.hpp"
#include "memattest/rng.hpp"

namespace memattest {

namespace {

constexpr uint64_t kBenignAlertCap = 2;
constexpr uint64_t kBenignMceCap = 2;
constexpr uint64_t kMaliciousEventFloor = 3;

void check_victim(const PatternParams& params, const DramConfig& dram) {
    if (params.victim.rank >= dram.ranks || params.victim.bank >= dram.banks_per_rank ||
        params.victim.row >= dram.rows_per_bank) {
        throw Error(ErrorCode::InfeasibleParams, "victim address outside DRAM geometry");
    }
}

std::vector<MceInjection> draw_mce_events(Rng& rng, uint32_t count, uint64_t trace_len) {
    std::vector<MceInjection> events;
    events.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        MceInjection inj;
        inj.at_step = rng.below(std::max<uint64_t>(trace_len, 1));
        inj.payload.error_type = rng.chance(1, 3) ? "UE" : "CE";
        inj.payload.address = (rng.next_u64() & 0x0000'000f'ffff'ffc0ULL); // 64B aligned
        events.push_back(std::move(inj));
    }
    std::sort(events.begin(), events.end(),
              [](const MceInjection& a, const MceInjection& b) { return a.at_step < b.at_step; });
    return events;
}

// Uniform capped traffic: a working set sized so an epoch can never exhaust
// it, first touched as a full sweep (many distinct rows), then uniformly.
void emit_benign_traffic(Trace& trace, Rng& rng, const PatternParams& params,
                         const DramConfig& dram, uint64_t commands) {
    uint64_t cap = params.benign_row_cap;
    uint64_t span = std::min<uint64_t>(commands, dram.refresh_window_acts);
    uint64_t total_rows = uint64_t(dram.ranks) * dram.banks_per_rank * dram.rows_per_bank;
    uint64_t want = std::max<uint64_t>(10, 2 * ((span + cap - 1) / cap));
    if (want > total_rows) {
        throw Error(ErrorCode::InfeasibleParams,
                    "device too small for capped benign traffic of this length");
    }

    std::set<RowAddress> chosen;
    std::vector<RowAddress> working_set;
    while (working_set.size() < want) {
        RowAddress addr{uint32_t(rng.below(dram.ranks)), uint32_t(rng.below(dram.banks_per_rank)),
                        uint32_t(rng.below(dram.rows_per_bank))};
        if (chosen.insert(addr).second) working_set.push_back(addr);
    }

    std::vector<uint64_t> used(working_set.size(), 0);
    uint64_t since_ref = 0;
    for (uint64_t i = 0; i < commands; ++i) {
        if (since_ref == dram.refresh_window_acts) {
            trace.push_back(RefCommand{});
            std::fill(used.begin(), used.end(), 0);
            since_ref = 0;
            continue;
        }
        size_t pick;
        if (i < working_set.size()) {
            pick = size_t(i); // initial sweep guarantees distinct-row coverage
        } else {
            do {
                pick = size_t(rng.below(working_set.size()));
            } while (used[pick] >= cap);
        }
        ++used[pick];
        ++since_ref;
        trace.push_back(ActCommand{working_set[pick]});
    }
}

// Interleaves activations of the given aggressor rows, sweeping round-robin,
// with periodic REF like any real command stream.
void emit_hammering(Trace& trace, const std::vector<RowAddress>& aggressors, uint64_t reps,
                    const DramConfig& dram) {
    uint64_t since_ref = 0;
    for (uint64_t r = 0; r < reps; ++r) {
        for (const auto& addr : aggressors) {
            if (since_ref == dram.refresh_window_acts) {
                trace.push_back(RefCommand{});
                since_ref = 0;
            }
            trace.push_back(ActCommand{addr});
            ++since_ref;
        }
    }
}

std::vector<RowAddress> pick_aggressors(const PatternParams& params, const DramConfig& dram,
                                        uint32_t count) {
    uint32_t rows = dram.rows_per_bank;
    if (rows <= count) {
        throw Error(ErrorCode::InfeasibleParams, "bank too small for aggressor layout");
    }
    // Shift boundary victims inward so both neighbours exist.
    uint32_t victim = params.victim.row;
    uint32_t half = (count + 1) / 2;
    victim = std::clamp(victim, half, rows - 1 - half);

    std::vector<RowAddress> aggressors;
    for (uint32_t dist = 1; aggressors.size() < count; ++dist) {
        if (dist > victim && victim + dist >= rows) {
            throw Error(ErrorCode::InfeasibleParams, "cannot place aggressors around victim");
        }
        if (dist <= victim) {
            aggressors.push_back({params.victim.rank, params.victim.bank, victim - dist});
            if (aggressors.size() == count) break;
        }
        if (victim + dist < rows) {
            aggressors.push_back({params.victim.rank, params.victim.bank, victim + dist});
        }
    }
    return aggressors;
}

} // namespace

const char* to_string(PatternKind kind) {
    switch (kind) {
    case PatternKind::Benign: return "benign";
    case PatternKind::DoubleSided: return "double-sided";
    case PatternKind::ManySided: return "many-sided";
    case PatternKind::EccTemplating: return "ecc-templating";
    }
    return "unknown";
}

PatternKind pattern_kind_from_string(const std::string& s) {
    if (s == "benign") return PatternKind::Benign;
    if (s == "double-sided") return PatternKind::DoubleSided;
    if (s == "many-sided") return PatternKind::ManySided;
    if (s == "ecc-templating") return PatternKind::EccTemplating;
    throw Error(ErrorCode::InfeasibleParams, "unknown pattern kind '" + s + "'");
}

const char* to_string(ScenarioLabel label) {
    return label == ScenarioLabel::Benign ? "benign" : "malicious";
}

Scenario generate(const PatternParams& params, const DramConfig& dram) {
    dram.validate();
    if (params.length < 1) {
        throw Error(ErrorCode::InfeasibleParams, "length must be >= 1");
    }

    Rng rng(params.seed);
    Scenario scenario;

    switch (params.kind) {
    case PatternKind::Benign: {
        if (params.benign_row_cap >= dram.abo_threshold) {
            throw Error(ErrorCode::InfeasibleParams,
                        "benign_row_cap must stay below abo_threshold");
        }
        if (params.injected_mce_count > kBenignMceCap) {
            throw Error(ErrorCode::InfeasibleParams, "benign scenarios allow at most 2 MCEs");
        }
        emit_benign_traffic(scenario.trace, rng, params, dram, params.length);
        scenario.label = ScenarioLabel::Benign;
        break;
    }
    case PatternKind::DoubleSided:
    case PatternKind::ManySided: {
        check_victim(params, dram);
        if (params.hammer_reps < dram.abo_threshold) {
            throw Error(ErrorCode::InfeasibleParams,
                        "hammer_reps below abo_threshold cannot trip the counters");
        }
        uint32_t count = params.kind == PatternKind::DoubleSided ? 2 : params.aggressor_count;
        if (count < 2) {
            throw Error(ErrorCode::InfeasibleParams, "aggressor_count must be >= 2");
        }
        auto aggressors = pick_aggressors(params, dram, count);
        emit_hammering(scenario.trace, aggressors, params.hammer_reps, dram);
        scenario.label = ScenarioLabel::Malicious;
        break;
    }
    case PatternKind::EccTemplating: {
        check_victim(params, dram);
        // Templating keeps each aggressor just under the alert threshold and
        // relies on the bit-flip MCEs it provokes.
        if (params.injected_mce_count < kMaliciousEventFloor) {
            throw Error(ErrorCode::InfeasibleParams,
                        "ecc-templating needs at least 3 injected MCEs");
        }
        auto aggressors = pick_aggressors(params, dram, 2);
        uint64_t reps = std::min<uint64_t>(params.hammer_reps, dram.abo_threshold - 1);
        emit_hammering(scenario.trace, aggressors, reps, dram);
        scenario.label = ScenarioLabel::Malicious;
        break;
    }
    }

    scenario.trace.push_back(EndCommand{});
    scenario.mce_events = draw_mce_events(rng, params.injected_mce_count, scenario.trace.size());

    // Label check against a real simulation of the generated commands.
    SimReport report = run_trace(dram, scenario.trace);
    uint64_t alerts = report.abo_alerts.size();
    uint64_t mces = scenario.mce_events.size();
    bool looks_malicious = alerts >= kMaliciousEventFloor || mces >= kMaliciousEventFloor;
    if (scenario.label == ScenarioLabel::Benign && looks_malicious) {
        throw Error(ErrorCode::InfeasibleParams,
                    "benign construction produced " + std::to_string(alerts) + " alerts");
    }
    if (scenario.label == ScenarioLabel::Malicious && !looks_malicious) {
        throw Error(ErrorCode::InfeasibleParams,
                    "malicious construction produced only " + std::to_string(alerts) +
                        " alerts and " + std::to_string(mces) + " MCEs");
    }
    return scenario;
}

std::string scenario_to_json(const Scenario& scenario) {
    nlohmann::json j;
    j["label"] = to_string(scenario.label);
    j["mce_events"] = nlohmann::json::array();
    for (const auto& e : scenario.mce_events) {
        j["mce_events"].push_back({{"at_step", e.at_step},
                                   {"error_type", e.payload.error_type},
                                   {"address", e.payload.address}});
    }
    j["trace"] = nlohmann::json::array();
    for (const auto& cmd : scenario.trace) {
        j["trace"].push_back(format_command(cmd));
    }
    return j.dump(2);
}

namespace {

Scenario scenario_from_parsed(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
        throw Error(ErrorCode::MalformedJson, "scenario wants a 'label' string");
    }
    Scenario s;
    std::string label = j["label"].get<std::string>();
    if (label == "benign") {
        s.label = ScenarioLabel::Benign;
    } else if (label == "malicious") {
        s.label = ScenarioLabel::Malicious;
    } else {
        throw Error(ErrorCode::MalformedJson, "unknown label '" + label + "'");
    }
    if (j.contains("mce_events")) {
        for (const auto& e : j["mce_events"]) {
            MceInjection inj;
            inj.at_step = e.at("at_step").get<uint64_t>();
            inj.payload.error_type = e.at("error_type").get<std::string>();
            inj.payload.address = e.at("address").get<uint64_t>();
            s.mce_events.push_back(std::move(inj));
        }
        std::sort(s.mce_events.begin(), s.mce_events.end(),
                  [](const MceInjection& a, const MceInjection& b) {
                      return a.at_step < b.at_step;
                  });
    }
    if (j.contains("trace")) {
        std::string text;
        for (const auto& line : j["trace"]) {
            text += line.get<std::string>();
            text += '\n';
        }
        s.trace = parse_trace(text);
    } else if (j.contains("trace_file")) {
        std::filesystem::path p = j["trace_file"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) {
            throw Error(ErrorCode::StorageFailure, "cannot open trace file " + p.string());
        }
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        s.trace = parse_trace(text);
    } else {
        throw Error(ErrorCode::MalformedJson, "scenario wants 'trace' or 'trace_file'");
    }
    return s;
}

} // namespace

Scenario scenario_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::MalformedJson, "scenario is not valid JSON");
    }
    try {
        return scenario_from_parsed(j, std::filesystem::current_path());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

Scenario scenario_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::StorageFailure, "cannot open scenario file " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::MalformedJson, "scenario is not valid JSON");
    }
    try {
        return scenario_from_parsed(j, std::filesystem::path(path).parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

} // namespace memattest
