#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memattest/dram_sim.hpp"
#include "memattest/measurement.hpp"

namespace memattest {

enum class PatternKind {
    Benign,        // capped uniform traffic over a working set
    DoubleSided,   // alternate activations of victim-adjacent rows
    ManySided,     // round-robin over aggressor_count rows around the victim
    EccTemplating, // sub-threshold hammering plus injected MCEs
};

const char* to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string& s);

struct PatternParams {
    PatternKind kind = PatternKind::Benign;
    uint64_t length = 5000;        // command budget for benign/background traffic
    RowAddress victim{0, 0, 128};  // malicious kinds only
    uint32_t aggressor_count = 8;  // ManySided only
    uint64_t hammer_reps = 200;    // activations per aggressor row
    uint64_t benign_row_cap = 8;   // max activations per row per refresh epoch
    uint32_t injected_mce_count = 0;
    uint64_t seed = 1;
};

struct MceInjection {
    uint64_t at_step = 0; // trace step the exception is observed at
    McePayload payload;

    bool operator==(const MceInjection&) const = default;
};

enum class ScenarioLabel { Benign, Malicious };

const char* to_string(ScenarioLabel label);

struct Scenario {
    Trace trace;
    std::vector<MceInjection> mce_events; // sorted by at_step
    ScenarioLabel label = ScenarioLabel::Benign;

    bool operator==(const Scenario&) const = default;
};

// Builds a deterministic scenario and checks its label against an actual
// simulation of the trace: benign scenarios must show at most two ABO alerts
// and two MCEs, malicious ones at least three alerts or three MCEs.
// Violations and conflicting caps raise Error{InfeasibleParams}.
Scenario generate(const PatternParams& params, const DramConfig& dram);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text); // inline trace only
// Resolves a {"trace_file": ...} reference against base_dir.
Scenario scenario_from_json_file(const std::string& path);

} // namespace memattest
