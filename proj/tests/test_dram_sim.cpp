#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memattest/dram_sim.hpp"
#include "memattest/error.hpp"
#include "support/reference_automaton.hpp"
#include "support/test_util.hpp"

using namespace memattest;
using namespace memattest::testsupport;

namespace {

DramConfig small_config() {
    DramConfig cfg;
    cfg.ranks = 1;
    cfg.banks_per_rank = 2;
    cfg.rows_per_bank = 8;
    return cfg;
}

void check_matches_reference(const DramConfig& cfg, const Trace& trace) {
    SimReport report = run_trace(cfg, trace);
    auto expected = reference_alerts(cfg, trace);
    REQUIRE(report.abo_alerts.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        const auto& got = report.abo_alerts[i];
        const auto& want = expected[i];
        CHECK(got.step_index == want.step);
        CHECK(got.addr.rank == want.rank);
        CHECK(got.addr.bank == want.bank);
        CHECK(got.addr.row == want.row);
        CHECK(got.counter_value == want.counter);
    }
}

} // namespace

TEST_CASE("fresh simulator starts zeroed and Normal") {
    Simulator sim{DramConfig{}};
    CHECK(sim.config().ranks == 2);
    CHECK(sim.rank_state(0) == AboState{});
    CHECK(sim.rank_state(1) == AboState{});
    CHECK(sim.row_counter({0, 0, 0}) == 0);
    CHECK(sim.row_counter({1, 31, 65535}) == 0);
    CHECK(sim.steps_taken() == 0);
}

TEST_CASE("config bounds are enforced") {
    DramConfig cfg;
    cfg.abo_recovery_refs = 5;
    CHECK_THROWS_AS(Simulator{cfg}, Error);

    cfg = DramConfig{};
    cfg.abo_threshold = 0;
    CHECK_THROWS_AS(Simulator{cfg}, Error);

    cfg = DramConfig{};
    cfg.rows_per_bank = 0;
    CHECK_THROWS_AS(Simulator{cfg}, Error);

    cfg = DramConfig{};
    cfg.abo_recovery_refs = 0;
    CHECK_THROWS_AS(Simulator{cfg}, Error);
}

TEST_CASE("sixteen activations raise exactly one alert at the sixteenth") {
    Simulator sim{DramConfig{}};
    size_t alerts = 0;
    for (int i = 0; i < 16; ++i) {
        auto batch = sim.step(act(0, 0, 3));
        if (i < 15) CHECK(batch.empty());
        alerts += batch.size();
        if (!batch.empty()) {
            CHECK(i == 15);
            CHECK(batch[0].counter_value == 16);
            CHECK(batch[0].addr == RowAddress{0, 0, 3});
        }
    }
    CHECK(alerts == 1);
}

TEST_CASE("fifteen activations raise nothing") {
    SimReport report = run_trace(DramConfig{}, acts_then_end(0, 0, 3, 15));
    CHECK(report.abo_alerts.empty());
    CHECK(report.total_activations == 15);
    CHECK(report.max_row_counter == 15);
}

TEST_CASE("sixty-four activations match the reference automaton") {
    Trace trace = acts_then_end(0, 0, 3, 64);
    check_matches_reference(DramConfig{}, trace);

    // Known walk with default tuning: alert, three budget acts, recovery,
    // four delay acts, then eleven more to recross the threshold.
    SimReport report = run_trace(DramConfig{}, trace);
    REQUIRE(report.abo_alerts.size() == 3);
    CHECK(report.abo_alerts[0].step_index == 15);
    CHECK(report.abo_alerts[1].step_index == 34);
    CHECK(report.abo_alerts[2].step_index == 53);
    for (const auto& a : report.abo_alerts) CHECK(a.counter_value == 16);
}

TEST_CASE("address out of range is rejected with the step index") {
    Trace t{act(0, 0, 70000), EndCommand{}};
    DramConfig cfg = small_config();
    try {
        run_trace(cfg, t);
        FAIL("expected address error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AddressOutOfRange);
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("rfm_service refreshes the per-bank maximum and only that") {
    DramConfig cfg = small_config();
    cfg.banks_per_rank = 1;
    cfg.abo_threshold = 18;
    cfg.prerecovery_act_budget = 2;
    Simulator sim{cfg};
    for (int i = 0; i < 5; ++i) sim.step(act(0, 0, 1));
    for (int i = 0; i < 20; ++i) sim.step(act(0, 0, 0)); // alert at 18, budget empties at 20
    REQUIRE(sim.rank_state(0).phase == AboState::Phase::Recovery);
    CHECK(sim.row_counter({0, 0, 0}) == 20);
    CHECK(sim.row_counter({0, 0, 1}) == 5);

    auto refreshed = sim.rfm_service();
    REQUIRE(refreshed.size() == 1);
    CHECK(refreshed[0] == RowAddress{0, 0, 0});
    CHECK(sim.row_counter({0, 0, 0}) == 0);
    CHECK(sim.row_counter({0, 0, 1}) == 5);
}

TEST_CASE("rfm_service tie-breaks to row zero when every counter is clear") {
    DramConfig cfg = small_config();
    cfg.banks_per_rank = 1;
    cfg.rows_per_bank = 4;
    cfg.abo_threshold = 1;
    cfg.prerecovery_act_budget = 0;
    cfg.abo_recovery_refs = 2;
    Simulator sim{cfg};
    auto alerts = sim.step(act(0, 0, 3));
    REQUIRE(alerts.size() == 1);
    REQUIRE(sim.rank_state(0).phase == AboState::Phase::Recovery);

    auto first = sim.rfm_service();
    REQUIRE(first.size() == 1);
    CHECK(first[0] == RowAddress{0, 0, 3});

    auto second = sim.rfm_service(); // nothing hot anywhere: row 0 by tie-break
    REQUIRE(second.size() == 1);
    CHECK(second[0] == RowAddress{0, 0, 0});
    for (uint32_t r = 0; r < 4; ++r) CHECK(sim.row_counter({0, 0, r}) == 0);
    CHECK(sim.rank_state(0).phase == AboState::Phase::Delay);
}

TEST_CASE("rfm_service covers every bank, against a brute-force scan") {
    DramConfig cfg;
    cfg.ranks = 1;
    cfg.banks_per_rank = 3;
    cfg.rows_per_bank = 8;
    cfg.abo_threshold = 10;
    cfg.prerecovery_act_budget = 0;
    Simulator sim{cfg};
    for (int i = 0; i < 4; ++i) sim.step(act(0, 0, 2));
    for (int i = 0; i < 6; ++i) sim.step(act(0, 1, 5));
    for (int i = 0; i < 3; ++i) sim.step(act(0, 2, 7));
    for (int i = 0; i < 10; ++i) sim.step(act(0, 0, 1)); // trips the alert
    REQUIRE(sim.rank_state(0).phase == AboState::Phase::Recovery);

    // Brute-force expectation from the live counters.
    std::vector<RowAddress> expected;
    for (uint32_t bank = 0; bank < cfg.banks_per_rank; ++bank) {
        uint64_t best = 0;
        uint32_t best_row = 0;
        for (uint32_t row = 0; row < cfg.rows_per_bank; ++row) {
            uint64_t v = sim.row_counter({0, bank, row});
            if (v > best) {
                best = v;
                best_row = row;
            }
        }
        expected.push_back({0, bank, best_row});
    }
    auto refreshed = sim.rfm_service();
    CHECK(refreshed == expected);
    CHECK(expected == std::vector<RowAddress>{{0, 0, 1}, {0, 1, 5}, {0, 2, 7}});
}

TEST_CASE("rfm_service outside Recovery is a state violation") {
    Simulator sim{small_config()};
    CHECK_THROWS_AS(sim.rfm_service(), Error);
    sim.step(act(0, 0, 0));
    try {
        sim.rfm_service();
        FAIL("expected state violation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StateViolation);
    }
}

TEST_CASE("explicit RFM commands walk recovery one service at a time") {
    DramConfig cfg = small_config();
    cfg.abo_threshold = 4;
    cfg.prerecovery_act_budget = 0;
    cfg.abo_recovery_refs = 2;
    cfg.abo_delay_acts = 1;
    Simulator sim{cfg};
    for (int i = 0; i < 4; ++i) sim.step(act(0, 0, 1));
    CHECK(sim.rank_state(0) == AboState{AboState::Phase::Recovery, 2});
    sim.step(RfmCommand{});
    CHECK(sim.rank_state(0) == AboState{AboState::Phase::Recovery, 1});
    sim.step(RfmCommand{});
    CHECK(sim.rank_state(0) == AboState{AboState::Phase::Delay, 1});
    sim.step(act(0, 0, 1));
    CHECK(sim.rank_state(0) == AboState{AboState::Phase::Normal, 0});
}

TEST_CASE("a stray RFM with nothing recovering changes nothing") {
    Simulator sim{small_config()};
    sim.step(act(0, 0, 2));
    sim.step(RfmCommand{});
    CHECK(sim.row_counter({0, 0, 2}) == 1);
    CHECK(sim.rank_state(0).phase == AboState::Phase::Normal);
}

TEST_CASE("REF clears counters and forces every rank back to Normal") {
    DramConfig cfg = small_config();
    cfg.abo_threshold = 2;
    cfg.prerecovery_act_budget = 0;
    Simulator sim{cfg};
    sim.step(act(0, 0, 1));
    sim.step(act(0, 0, 1)); // alert, recovery pending
    CHECK(sim.rank_state(0).phase == AboState::Phase::Recovery);
    sim.step(RefCommand{});
    CHECK(sim.rank_state(0).phase == AboState::Phase::Normal);
    CHECK(sim.row_counter({0, 0, 1}) == 0);
}

TEST_CASE("alerts on one rank do not gate the other") {
    DramConfig cfg;
    cfg.ranks = 2;
    cfg.banks_per_rank = 1;
    cfg.rows_per_bank = 8;
    cfg.abo_threshold = 2;
    cfg.prerecovery_act_budget = 0;
    Simulator sim{cfg};
    sim.step(act(0, 0, 1));
    sim.step(act(0, 0, 1));
    CHECK(sim.rank_state(0).phase == AboState::Phase::Recovery);
    auto alerts = sim.step(act(1, 0, 1));
    CHECK(alerts.empty());
    CHECK(sim.rank_state(1).phase == AboState::Phase::Normal);
    CHECK(sim.rank_state(0).phase == AboState::Phase::Recovery);
    CHECK(sim.row_counter({1, 0, 1}) == 1);
}

TEST_CASE("no alert fires while the delay window runs") {
    DramConfig cfg = small_config();
    cfg.abo_threshold = 4;
    cfg.prerecovery_act_budget = 1;
    cfg.abo_recovery_refs = 1;
    cfg.abo_delay_acts = 8;
    // Alert at act 4, budget act 5, act 6 forces recovery and lands in the
    // delay window; acts 6..13 run the window with the counter far past the
    // threshold; the next Normal act re-alerts.
    Trace t = acts_then_end(0, 0, 2, 14);
    SimReport report = run_trace(cfg, t);
    REQUIRE(report.abo_alerts.size() == 2);
    CHECK(report.abo_alerts[0].step_index == 3);
    CHECK(report.abo_alerts[1].step_index == 13);
    check_matches_reference(cfg, t);
}

TEST_CASE("empty trace yields an empty report") {
    SimReport report = run_trace(DramConfig{}, Trace{EndCommand{}});
    CHECK(report.abo_alerts.empty());
    CHECK(report.total_activations == 0);
    CHECK(report.per_row_histogram.empty());
}

TEST_CASE("run_trace requires END termination") {
    CHECK_THROWS_AS(run_trace(DramConfig{}, Trace{act(0, 0, 0)}), Error);
    CHECK_THROWS_AS(run_trace(DramConfig{}, Trace{}), Error);
}

TEST_CASE("run_trace is deterministic") {
    Rng rng(99);
    DramConfig cfg = small_config();
    Trace t = random_trace(rng, cfg, 400);
    SimReport a = run_trace(cfg, t);
    SimReport b = run_trace(cfg, t);
    CHECK(a == b);
}

TEST_CASE("report aggregates follow the trace") {
    DramConfig cfg = small_config();
    Trace t;
    append_acts(t, 0, 0, 1, 3);
    append_acts(t, 0, 1, 2, 5);
    t.push_back(RefCommand{});
    append_acts(t, 0, 0, 1, 2);
    t.push_back(EndCommand{});
    SimReport report = run_trace(cfg, t);
    CHECK(report.total_activations == 10);
    CHECK(report.max_row_counter == 5);
    CHECK(report.per_row_histogram.at({0, 0, 1}) == 5); // histogram ignores resets
    CHECK(report.per_row_histogram.at({0, 1, 2}) == 5);
}

TEST_CASE("alert counters always sit at or above the threshold") {
    Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        DramConfig cfg = random_abo_tuning(rng, small_config());
        Trace t = random_trace(rng, cfg, 600);
        SimReport report = run_trace(cfg, t);
        for (const auto& a : report.abo_alerts) {
            CHECK(a.counter_value >= cfg.abo_threshold);
        }
    }
}

TEST_CASE("random traces match the reference automaton") {
    Rng rng(4242);
    for (int i = 0; i < 2000; ++i) {
        DramConfig cfg = random_abo_tuning(rng, small_config());
        Trace t = random_trace(rng, cfg, 500);
        check_matches_reference(cfg, t);
    }
}

TEST_CASE("trace text round-trips") {
    std::string text = "# warmup\nACT 0 1 5\nACT 1 0 2\nREF\nRFM\nEND\n";
    Trace t = parse_trace(text);
    REQUIRE(t.size() == 5);
    CHECK(t[0] == TraceCommand{act(0, 1, 5)});
    CHECK(t[2] == TraceCommand{RefCommand{}});
    CHECK(format_trace(t) == "ACT 0 1 5\nACT 1 0 2\nREF\nRFM\nEND\n");
    CHECK(parse_trace(format_trace(t)) == t);
}

TEST_CASE("trace parser rejects junk") {
    CHECK_THROWS_AS(parse_trace("ACT 0 1\nEND\n"), Error);
    CHECK_THROWS_AS(parse_trace("WRITE 0 1 2\nEND\n"), Error);
    CHECK_THROWS_AS(parse_trace("END\nACT 0 0 0\n"), Error);
    CHECK_THROWS_AS(parse_trace("ACT 0 0 nine\nEND\n"), Error);
    CHECK(parse_trace("").empty());
}

TEST_CASE("sim report serializes to JSON") {
    DramConfig cfg = small_config();
    cfg.abo_threshold = 2;
    SimReport report = run_trace(cfg, acts_then_end(0, 0, 1, 3));
    std::string j = report.to_json();
    CHECK(j.find("\"abo_alerts\"") != std::string::npos);
    CHECK(j.find("\"total_activations\": 3") != std::string::npos);
}
