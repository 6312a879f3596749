#include "memattest/dram_sim.hpp"

#include <algorithm>
#include <sstream>

#include "memattest/error.hpp"

namespace memattest {

namespace {
// A recovering rank only ever holds the one ACT that forced recovery
// completion, but the bound guards manual drivers that pile up ACTs.
constexpr size_t kActBufferBound = 64;
} // namespace

void DramConfig::validate() const {
    if (ranks < 1 || banks_per_rank < 1 || rows_per_bank < 1) {
        throw Error(ErrorCode::InvalidConfig, "ranks, banks_per_rank, rows_per_bank must be >= 1");
    }
    if (abo_threshold < 1) {
        throw Error(ErrorCode::InvalidConfig, "abo_threshold must be >= 1");
    }
    if (abo_recovery_refs < 1 || abo_recovery_refs > 4) {
        throw Error(ErrorCode::InvalidConfig, "abo_recovery_refs must be in 1..=4");
    }
    if (refresh_window_acts < 1) {
        throw Error(ErrorCode::InvalidConfig, "refresh_window_acts must be >= 1");
    }
}

Simulator::Simulator(DramConfig config) : config_(config) {
    config_.validate();
    rank_states_.resize(config_.ranks);
    banks_.resize(size_t(config_.ranks) * config_.banks_per_rank);
}

void Simulator::check_address(const RowAddress& addr) const {
    if (addr.rank >= config_.ranks || addr.bank >= config_.banks_per_rank ||
        addr.row >= config_.rows_per_bank) {
        throw Error(ErrorCode::AddressOutOfRange,
                    "rank " + std::to_string(addr.rank) + " bank " + std::to_string(addr.bank) +
                        " row " + std::to_string(addr.row));
    }
}

AboState Simulator::rank_state(uint32_t rank) const {
    if (rank >= config_.ranks) {
        throw Error(ErrorCode::AddressOutOfRange, "rank " + std::to_string(rank));
    }
    return rank_states_[rank].abo;
}

uint64_t Simulator::row_counter(const RowAddress& addr) const {
    check_address(addr);
    const auto& rows = banks_[size_t(addr.rank) * config_.banks_per_rank + addr.bank].rows;
    auto it = rows.find(addr.row);
    return it == rows.end() ? 0 : it->second;
}

std::vector<RowAddress> Simulator::rfm_pass_for_rank(uint32_t rank) {
    std::vector<RowAddress> refreshed;
    refreshed.reserve(config_.banks_per_rank);
    for (uint32_t bank = 0; bank < config_.banks_per_rank; ++bank) {
        auto& rows = banks_[size_t(rank) * config_.banks_per_rank + bank].rows;
        uint64_t best_val = 0;
        uint32_t best_row = 0;
        for (const auto& [row, count] : rows) {
            if (count > best_val) {
                best_val = count;
                best_row = row;
            }
        }
        rows.erase(best_row);
        refreshed.push_back({rank, bank, best_row});
    }
    return refreshed;
}

std::vector<RowAddress> Simulator::rfm_service() {
    std::vector<RowAddress> refreshed;
    bool any = false;
    for (uint32_t rank = 0; rank < config_.ranks; ++rank) {
        auto& st = rank_states_[rank];
        if (st.abo.phase != AboState::Phase::Recovery) continue;
        any = true;
        auto pass = rfm_pass_for_rank(rank);
        refreshed.insert(refreshed.end(), pass.begin(), pass.end());
        if (--st.abo.remaining == 0) {
            st.abo.phase = AboState::Phase::Delay;
            st.abo.remaining = config_.abo_delay_acts;
            if (st.abo.remaining == 0) st.abo = AboState{};
        }
    }
    if (!any) {
        throw Error(ErrorCode::StateViolation, "rfm_service with no rank in Recovery");
    }
    return refreshed;
}

void Simulator::complete_recovery(uint32_t rank, std::vector<AboAlertEvent>& alerts) {
    auto& st = rank_states_[rank];
    while (st.abo.phase == AboState::Phase::Recovery) {
        rfm_pass_for_rank(rank);
        if (--st.abo.remaining == 0) {
            st.abo.phase = AboState::Phase::Delay;
            st.abo.remaining = config_.abo_delay_acts;
            if (st.abo.remaining == 0) st.abo = AboState{};
        }
    }
    auto pending = std::move(st.act_buffer);
    st.act_buffer.clear();
    for (const auto& addr : pending) {
        auto more = apply_act(addr);
        alerts.insert(alerts.end(), more.begin(), more.end());
    }
}

std::vector<AboAlertEvent> Simulator::apply_act(const RowAddress& addr) {
    std::vector<AboAlertEvent> alerts;
    auto& st = rank_states_[addr.rank];

    if (st.abo.phase == AboState::Phase::Recovery) {
        if (st.act_buffer.size() >= kActBufferBound) {
            throw Error(ErrorCode::TraceError, "activation buffer overflow during recovery");
        }
        st.act_buffer.push_back(addr);
        complete_recovery(addr.rank, alerts);
        return alerts;
    }

    auto& rows = banks_[size_t(addr.rank) * config_.banks_per_rank + addr.bank].rows;
    uint64_t counter = ++rows[addr.row];
    ++total_activations_;
    ++histogram_[addr];
    max_row_counter_ = std::max(max_row_counter_, counter);

    switch (st.abo.phase) {
    case AboState::Phase::Normal:
        if (counter >= config_.abo_threshold) {
            alerts.push_back({step_index_, addr, counter});
            st.abo.phase = AboState::Phase::PreRecovery;
            st.abo.remaining = config_.prerecovery_act_budget;
            if (st.abo.remaining == 0) {
                st.abo.phase = AboState::Phase::Recovery;
                st.abo.remaining = config_.abo_recovery_refs;
            }
        }
        break;
    case AboState::Phase::PreRecovery:
        if (--st.abo.remaining == 0) {
            st.abo.phase = AboState::Phase::Recovery;
            st.abo.remaining = config_.abo_recovery_refs;
        }
        break;
    case AboState::Phase::Delay:
        if (--st.abo.remaining == 0) {
            st.abo = AboState{};
        }
        break;
    case AboState::Phase::Recovery:
        break; // handled above
    }
    return alerts;
}

std::vector<AboAlertEvent> Simulator::step(const TraceCommand& cmd) {
    std::vector<AboAlertEvent> alerts;

    if (const auto* act = std::get_if<ActCommand>(&cmd)) {
        check_address(act->addr);
        alerts = apply_act(act->addr);
    } else if (std::holds_alternative<RefCommand>(cmd)) {
        // Periodic refresh closes the epoch: counters and automata reset.
        for (auto& bank : banks_) bank.rows.clear();
        for (auto& st : rank_states_) {
            st.abo = AboState{};
            st.act_buffer.clear();
        }
    } else if (std::holds_alternative<RfmCommand>(cmd)) {
        // A trace-level RFM services recovering ranks; with nothing to
        // recover it carries no semantics in this model.
        bool recovering = std::any_of(rank_states_.begin(), rank_states_.end(), [](const auto& s) {
            return s.abo.phase == AboState::Phase::Recovery;
        });
        if (recovering) rfm_service();
    }
    // EndCommand: terminator, no state change.

    ++step_index_;
    return alerts;
}

SimReport run_trace(Simulator& sim, const Trace& trace) {
    if (trace.empty() || !std::holds_alternative<EndCommand>(trace.back())) {
        throw Error(ErrorCode::TraceError, "trace must be terminated by END");
    }
    SimReport report;
    for (size_t i = 0; i < trace.size(); ++i) {
        std::vector<AboAlertEvent> alerts;
        try {
            alerts = sim.step(trace[i]);
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(i) + ": " + e.what());
        }
        report.abo_alerts.insert(report.abo_alerts.end(), alerts.begin(), alerts.end());
    }
    report.total_activations = sim.total_activations_;
    report.max_row_counter = sim.max_row_counter_;
    report.per_row_histogram = sim.histogram_;
    return report;
}

SimReport run_trace(const DramConfig& config, const Trace& trace) {
    Simulator sim(config);
    return run_trace(sim, trace);
}

} // namespace memattest
