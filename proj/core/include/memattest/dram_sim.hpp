#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace memattest {

// Geometry and Alert Back-Off tuning of the simulated PRAC-enabled device.
// Defaults follow a two-rank DDR5 part with the common ABO parameter set
// (threshold 16, up to four recovery RFMs, four-activation delay window).
struct DramConfig {
    uint32_t ranks = 2;
    uint32_t banks_per_rank = 32;
    uint32_t rows_per_bank = 65536;

    uint32_t abo_threshold = 16;       // activations that trip the per-row alert
    uint32_t abo_delay_acts = 4;       // activations before the next alert may fire
    uint32_t abo_recovery_refs = 4;    // RFM services per recovery, 1..=4
    uint32_t prerecovery_act_budget = 3; // activations allowed between alert and blocking
    uint32_t refresh_window_acts = 8192; // commands per periodic-refresh epoch
    uint32_t abo_act_ns = 180; // vendor pre-recovery window; informational only,
                               // prerecovery_act_budget is the active knob
    uint64_t seed = 0;

    void validate() const; // throws Error{InvalidConfig}
};

struct RowAddress {
    uint32_t rank = 0;
    uint32_t bank = 0;
    uint32_t row = 0;

    auto operator<=>(const RowAddress&) const = default;
};

struct ActCommand {
    RowAddress addr;
    bool operator==(const ActCommand&) const = default;
};
struct RefCommand {
    bool operator==(const RefCommand&) const = default;
};
struct RfmCommand {
    bool operator==(const RfmCommand&) const = default;
};
struct EndCommand {
    bool operator==(const EndCommand&) const = default;
};

using TraceCommand = std::variant<ActCommand, RefCommand, RfmCommand, EndCommand>;
using Trace = std::vector<TraceCommand>;

struct AboAlertEvent {
    uint64_t step_index = 0;
    RowAddress addr;
    uint64_t counter_value = 0;

    bool operator==(const AboAlertEvent&) const = default;
};

struct SimReport {
    std::vector<AboAlertEvent> abo_alerts;
    uint64_t total_activations = 0;
    uint64_t max_row_counter = 0; // peak live counter seen at any step
    std::map<RowAddress, uint64_t> per_row_histogram; // activations per touched row

    bool operator==(const SimReport&) const = default;

    std::string to_json() const;
};

// Per-rank ABO automaton state.
struct AboState {
    enum class Phase { Normal, PreRecovery, Recovery, Delay };
    Phase phase = Phase::Normal;
    uint32_t remaining = 0; // budget acts / RFMs / delay acts, depending on phase

    bool operator==(const AboState&) const = default;
};

// Activation-count-driven model of a PRAC device: per-row counters, per-rank
// ABO automaton. Not cycle accurate; one trace command is one step.
//
// Recovery handling: when the pre-recovery budget runs out the rank parks in
// Recovery and waits for RFM services. Services come from explicit RFM trace
// commands, from rfm_service(), or, if an ACT addresses a rank still in
// Recovery, the controller first services every outstanding RFM and then
// applies the buffered ACT under the Delay rules.
class Simulator {
public:
    explicit Simulator(DramConfig config); // throws Error{InvalidConfig}

    // Processes one command, returns alerts emitted at this step.
    std::vector<AboAlertEvent> step(const TraceCommand& cmd);

    // One RFM pass over every rank currently in Recovery: per bank, the
    // highest-counter row (ties to the lowest row index) is refreshed and its
    // counter cleared. Throws Error{StateViolation} if no rank is recovering.
    std::vector<RowAddress> rfm_service();

    const DramConfig& config() const { return config_; }
    AboState rank_state(uint32_t rank) const;
    uint64_t row_counter(const RowAddress& addr) const;
    uint64_t steps_taken() const { return step_index_; }

private:
    struct RankState {
        AboState abo;
        std::vector<RowAddress> act_buffer; // ACTs held while recovering
    };
    struct BankCounters {
        std::map<uint32_t, uint64_t> rows; // row -> live counter, zeros elided
    };

    void check_address(const RowAddress& addr) const;
    std::vector<AboAlertEvent> apply_act(const RowAddress& addr);
    std::vector<RowAddress> rfm_pass_for_rank(uint32_t rank);
    void complete_recovery(uint32_t rank, std::vector<AboAlertEvent>& alerts);

    DramConfig config_;
    std::vector<RankState> rank_states_;
    std::vector<BankCounters> banks_; // indexed rank * banks_per_rank + bank
    uint64_t step_index_ = 0;
    uint64_t total_activations_ = 0;
    uint64_t max_row_counter_ = 0;
    std::map<RowAddress, uint64_t> histogram_;

    friend SimReport run_trace(Simulator& sim, const Trace& trace);
};

// Runs the whole trace (must be End-terminated) on a simulator, aggregating
// alerts and counters. Deterministic in (config, trace).
SimReport run_trace(Simulator& sim, const Trace& trace);
SimReport run_trace(const DramConfig& config, const Trace& trace);

// Line-oriented trace format: `ACT <rank> <bank> <row>`, `REF`, `RFM`, `END`,
// `#` comments, blank lines ignored.
Trace parse_trace(const std::string& text);
std::string format_trace(const Trace& trace);
std::string format_command(const TraceCommand& cmd);

} // namespace memattest
