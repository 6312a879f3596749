#include "reference_automaton.hpp"

#include <stdexcept>

namespace memattest::testsupport {

namespace {

// Phase encoding: 0 normal, 1 pre-recovery, 2 recovery, 3 delay.
struct RankCell {
    int phase = 0;
    uint32_t remaining = 0;
};

using Key = std::tuple<uint32_t, uint32_t, uint32_t>; // rank, bank, row

// One RFM pass on one rank: per bank, clear the highest counter
// (lowest row index wins ties; row 0 if everything is zero). Untracked rows
// count as zero, so only tracked entries can hold the maximum.
void rfm_pass(const memattest::DramConfig& cfg, uint32_t rank,
              std::map<Key, uint64_t>& counters) {
    for (uint32_t bank = 0; bank < cfg.banks_per_rank; ++bank) {
        uint64_t best_val = 0;
        uint32_t best_row = 0;
        auto it = counters.lower_bound({rank, bank, 0});
        for (; it != counters.end(); ++it) {
            auto [rk, bk, row] = it->first;
            if (rk != rank || bk != bank) break;
            if (it->second > best_val) {
                best_val = it->second;
                best_row = row;
            }
        }
        counters.erase({rank, bank, best_row});
    }
}

} // namespace

std::vector<RefAlert> reference_alerts(const memattest::DramConfig& cfg,
                                       const memattest::Trace& trace) {
    std::map<Key, uint64_t> counters;
    std::vector<RankCell> ranks(cfg.ranks);
    std::vector<RefAlert> alerts;

    for (uint64_t step = 0; step < trace.size(); ++step) {
        const auto& cmd = trace[step];

        if (std::holds_alternative<memattest::EndCommand>(cmd)) {
            break;
        }
        if (std::holds_alternative<memattest::RefCommand>(cmd)) {
            counters.clear();
            for (auto& r : ranks) r = RankCell{};
            continue;
        }
        if (std::holds_alternative<memattest::RfmCommand>(cmd)) {
            for (uint32_t rk = 0; rk < cfg.ranks; ++rk) {
                if (ranks[rk].phase != 2) continue;
                rfm_pass(cfg, rk, counters);
                if (--ranks[rk].remaining == 0) {
                    ranks[rk].phase = 3;
                    ranks[rk].remaining = cfg.abo_delay_acts;
                    if (cfg.abo_delay_acts == 0) ranks[rk] = RankCell{};
                }
            }
            continue;
        }

        const auto& act = std::get<memattest::ActCommand>(cmd);
        uint32_t rk = act.addr.rank, bk = act.addr.bank, rw = act.addr.row;
        if (rk >= cfg.ranks || bk >= cfg.banks_per_rank || rw >= cfg.rows_per_bank) {
            throw std::runtime_error("reference: address out of range at step " +
                                     std::to_string(step));
        }

        RankCell& cell = ranks[rk];

        // An ACT reaching a recovering rank forces the remaining RFM services
        // first; the ACT then lands in the Delay phase.
        if (cell.phase == 2) {
            while (cell.remaining > 0) {
                rfm_pass(cfg, rk, counters);
                --cell.remaining;
            }
            cell.phase = 3;
            cell.remaining = cfg.abo_delay_acts;
            if (cfg.abo_delay_acts == 0) cell = RankCell{};
        }

        uint64_t& ctr = counters[{rk, bk, rw}];
        ++ctr;

        if (cell.phase == 0) {
            if (ctr >= cfg.abo_threshold) {
                alerts.push_back({step, rk, bk, rw, ctr});
                cell.phase = 1;
                cell.remaining = cfg.prerecovery_act_budget;
                if (cell.remaining == 0) {
                    cell.phase = 2;
                    cell.remaining = cfg.abo_recovery_refs;
                }
            }
        } else if (cell.phase == 1) {
            if (--cell.remaining == 0) {
                cell.phase = 2;
                cell.remaining = cfg.abo_recovery_refs;
            }
        } else if (cell.phase == 3) {
            if (--cell.remaining == 0) {
                cell = RankCell{};
            }
        }
    }
    return alerts;
}

} // namespace memattest::testsupport
