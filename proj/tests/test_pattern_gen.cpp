#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "memattest/error.hpp"
#include "memattest/pattern_gen.hpp"
#include "support/reference_automaton.hpp"
#include "support/test_util.hpp"

using namespace memattest;
using namespace memattest::testsupport;

namespace {

PatternParams benign_params(uint64_t seed = 1) {
    PatternParams p;
    p.kind = PatternKind::Benign;
    p.length = 5000;
    p.benign_row_cap = 8;
    p.injected_mce_count = 0;
    p.seed = seed;
    return p;
}

} // namespace

TEST_CASE("benign traffic never trips the counters") {
    Scenario s = generate(benign_params(), DramConfig{});
    CHECK(s.label == ScenarioLabel::Benign);
    CHECK(s.mce_events.empty());
    CHECK(reference_alerts(DramConfig{}, s.trace).empty());
}

TEST_CASE("double-sided hammering alternates the victim's neighbours") {
    PatternParams p;
    p.kind = PatternKind::DoubleSided;
    p.victim = {0, 0, 100};
    p.hammer_reps = 200;
    p.seed = 3;
    DramConfig dram;
    Scenario s = generate(p, dram);
    CHECK(s.label == ScenarioLabel::Malicious);

    REQUIRE(s.trace.size() >= 5);
    CHECK(s.trace[0] == TraceCommand{act(0, 0, 99)});
    CHECK(s.trace[1] == TraceCommand{act(0, 0, 101)});
    CHECK(s.trace[2] == TraceCommand{act(0, 0, 99)});
    CHECK(s.trace[3] == TraceCommand{act(0, 0, 101)});

    CHECK(reference_alerts(dram, s.trace).size() >= 3);
}

TEST_CASE("many-sided hammering spreads over the aggressor set and still alerts") {
    PatternParams p;
    p.kind = PatternKind::ManySided;
    p.aggressor_count = 8;
    p.victim = {0, 0, 100};
    p.hammer_reps = 200;
    DramConfig dram;
    Scenario s = generate(p, dram);
    CHECK(s.label == ScenarioLabel::Malicious);

    std::set<uint32_t> rows;
    for (const auto& cmd : s.trace) {
        if (const auto* a = std::get_if<ActCommand>(&cmd)) rows.insert(a->addr.row);
    }
    CHECK(rows.size() == 8);
    CHECK(!rows.contains(100)); // the victim itself is never touched
    CHECK(reference_alerts(dram, s.trace).size() >= 3);
}

TEST_CASE("ecc templating stays under the counter radar and carries MCEs") {
    PatternParams p;
    p.kind = PatternKind::EccTemplating;
    p.victim = {0, 0, 100};
    p.injected_mce_count = 3;
    p.hammer_reps = 100; // clamped below threshold by the generator
    DramConfig dram;
    Scenario s = generate(p, dram);
    CHECK(s.label == ScenarioLabel::Malicious);
    CHECK(s.mce_events.size() == 3);
    CHECK(reference_alerts(dram, s.trace).size() <= 2);
    for (size_t i = 1; i < s.mce_events.size(); ++i) {
        CHECK(s.mce_events[i - 1].at_step <= s.mce_events[i].at_step);
    }
}

TEST_CASE("conflicting caps are infeasible") {
    PatternParams p = benign_params();
    p.benign_row_cap = 16; // equal to the default threshold
    CHECK_THROWS_AS(generate(p, DramConfig{}), Error);

    p = benign_params();
    p.injected_mce_count = 3; // a benign scenario cannot carry 3 MCEs
    CHECK_THROWS_AS(generate(p, DramConfig{}), Error);

    p = benign_params();
    p.length = 0;
    CHECK_THROWS_AS(generate(p, DramConfig{}), Error);

    PatternParams weak;
    weak.kind = PatternKind::DoubleSided;
    weak.victim = {0, 0, 100};
    weak.hammer_reps = 4; // cannot reach the threshold
    CHECK_THROWS_AS(generate(weak, DramConfig{}), Error);

    PatternParams ecc;
    ecc.kind = PatternKind::EccTemplating;
    ecc.victim = {0, 0, 100};
    ecc.injected_mce_count = 2; // malicious by MCEs needs at least 3
    CHECK_THROWS_AS(generate(ecc, DramConfig{}), Error);
}

TEST_CASE("boundary victims shift the aggressor pair inward") {
    DramConfig dram;
    PatternParams p;
    p.kind = PatternKind::DoubleSided;
    p.hammer_reps = 200;
    p.victim = {0, 0, 0};
    Scenario s = generate(p, dram);
    CHECK(s.trace[0] == TraceCommand{act(0, 0, 0)});
    CHECK(s.trace[1] == TraceCommand{act(0, 0, 2)});

    p.victim = {0, 0, dram.rows_per_bank - 1};
    s = generate(p, dram);
    CHECK(s.trace[0] == TraceCommand{act(0, 0, dram.rows_per_bank - 3)});
    CHECK(s.trace[1] == TraceCommand{act(0, 0, dram.rows_per_bank - 1)});
}

TEST_CASE("generation is deterministic per (params, dram)") {
    DramConfig dram;
    PatternParams p = benign_params(77);
    p.injected_mce_count = 2;
    Scenario a = generate(p, dram);
    Scenario b = generate(p, dram);
    CHECK(a == b);
    CHECK(scenario_to_json(a) == scenario_to_json(b));

    p.seed = 78;
    Scenario c = generate(p, dram);
    CHECK(a != c);
}

TEST_CASE("benign realism: many distinct rows, per-epoch cap respected") {
    DramConfig dram;
    dram.refresh_window_acts = 512; // several epochs within one scenario
    PatternParams p = benign_params(5);
    p.length = 2000;
    Scenario s = generate(p, dram);

    std::set<RowAddress> distinct;
    std::map<RowAddress, uint64_t> in_epoch;
    for (const auto& cmd : s.trace) {
        if (const auto* a = std::get_if<ActCommand>(&cmd)) {
            distinct.insert(a->addr);
            uint64_t& n = in_epoch[a->addr];
            ++n;
            CHECK(n <= p.benign_row_cap);
        } else if (std::holds_alternative<RefCommand>(cmd)) {
            in_epoch.clear();
        }
    }
    CHECK(distinct.size() >= 10);
}

TEST_CASE("label fidelity holds over randomized parameters") {
    Rng rng(31337);
    DramConfig dram;
    dram.rows_per_bank = 4096;
    for (int i = 0; i < 40; ++i) {
        PatternParams p;
        uint64_t kind = rng.below(4);
        p.seed = rng.next_u64();
        p.victim = {uint32_t(rng.below(dram.ranks)), uint32_t(rng.below(dram.banks_per_rank)),
                    uint32_t(rng.in_range(8, dram.rows_per_bank - 9))};
        switch (kind) {
        case 0:
            p.kind = PatternKind::Benign;
            p.length = rng.in_range(200, 3000);
            p.benign_row_cap = rng.in_range(2, dram.abo_threshold - 1);
            p.injected_mce_count = uint32_t(rng.below(3));
            break;
        case 1:
            p.kind = PatternKind::DoubleSided;
            p.hammer_reps = rng.in_range(100, 400);
            break;
        case 2:
            p.kind = PatternKind::ManySided;
            p.aggressor_count = uint32_t(rng.in_range(2, 10));
            p.hammer_reps = rng.in_range(100, 400);
            break;
        default:
            p.kind = PatternKind::EccTemplating;
            p.injected_mce_count = uint32_t(rng.in_range(3, 6));
            p.hammer_reps = rng.in_range(4, 100);
            break;
        }
        Scenario s = generate(p, dram);
        size_t alerts = reference_alerts(dram, s.trace).size();
        bool event_heavy = alerts >= 3 || s.mce_events.size() >= 3;
        CHECK(event_heavy == (s.label == ScenarioLabel::Malicious));
    }
}

TEST_CASE("scenario JSON round-trips") {
    DramConfig dram;
    PatternParams p;
    p.kind = PatternKind::EccTemplating;
    p.victim = {0, 0, 100};
    p.injected_mce_count = 4;
    Scenario s = generate(p, dram);
    Scenario parsed = scenario_from_json(scenario_to_json(s));
    CHECK(parsed == s);
}

TEST_CASE("scenario files may reference an external trace file") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "memattest_gen_test";
    fs::create_directories(dir);
    {
        std::ofstream t(dir / "cmds.trace");
        t << "ACT 0 0 1\nACT 0 0 2\nEND\n";
        std::ofstream j(dir / "scenario.json");
        j << R"({"label":"benign","mce_events":[],"trace_file":"cmds.trace"})";
    }
    Scenario s = scenario_from_json_file((dir / "scenario.json").string());
    CHECK(s.trace.size() == 3);
    CHECK(s.label == ScenarioLabel::Benign);
    fs::remove_all(dir);
}

TEST_CASE("malformed scenario JSON is a structured error") {
    CHECK_THROWS_AS(scenario_from_json("not json"), Error);
    CHECK_THROWS_AS(scenario_from_json(R"({"label":"odd","trace":[]})"), Error);
    CHECK_THROWS_AS(scenario_from_json(R"({"label":"benign"})"), Error);
    CHECK_THROWS_AS(scenario_from_json(R"({"label":"benign","trace":["FOO"]})"), Error);
}
