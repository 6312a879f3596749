#include <json.hpp>
#include <sstream>

#include "memattest/dram_sim.hpp"
#include "memattest/error.hpp"

namespace memattest {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

uint32_t parse_index(const std::string& tok, size_t line_no) {
    size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(tok, &pos);
    } catch (const std::exception&) {
        throw Error(ErrorCode::TraceError,
                    "line " + std::to_string(line_no) + ": bad index '" + tok + "'");
    }
    if (pos != tok.size() || v > 0xffffffffUL) {
        throw Error(ErrorCode::TraceError,
                    "line " + std::to_string(line_no) + ": bad index '" + tok + "'");
    }
    return static_cast<uint32_t>(v);
}

} // namespace

Trace parse_trace(const std::string& text) {
    Trace trace;
    bool ended = false;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (ended) {
            throw Error(ErrorCode::TraceError,
                        "line " + std::to_string(line_no) + ": command after END");
        }
        const std::string& op = toks[0];
        if (op == "ACT") {
            if (toks.size() != 4) {
                throw Error(ErrorCode::TraceError,
                            "line " + std::to_string(line_no) + ": ACT wants <rank> <bank> <row>");
            }
            trace.push_back(ActCommand{{parse_index(toks[1], line_no),
                                        parse_index(toks[2], line_no),
                                        parse_index(toks[3], line_no)}});
        } else if (op == "REF" && toks.size() == 1) {
            trace.push_back(RefCommand{});
        } else if (op == "RFM" && toks.size() == 1) {
            trace.push_back(RfmCommand{});
        } else if (op == "END" && toks.size() == 1) {
            trace.push_back(EndCommand{});
            ended = true;
        } else {
            throw Error(ErrorCode::TraceError,
                        "line " + std::to_string(line_no) + ": unknown command '" + line + "'");
        }
    }
    return trace;
}

std::string format_command(const TraceCommand& cmd) {
    if (const auto* act = std::get_if<ActCommand>(&cmd)) {
        return "ACT " + std::to_string(act->addr.rank) + " " + std::to_string(act->addr.bank) +
               " " + std::to_string(act->addr.row);
    }
    if (std::holds_alternative<RefCommand>(cmd)) return "REF";
    if (std::holds_alternative<RfmCommand>(cmd)) return "RFM";
    return "END";
}

std::string format_trace(const Trace& trace) {
    std::string out;
    for (const auto& cmd : trace) {
        out += format_command(cmd);
        out += '\n';
    }
    return out;
}

std::string SimReport::to_json() const {
    nlohmann::json j;
    j["abo_alerts"] = nlohmann::json::array();
    for (const auto& a : abo_alerts) {
        j["abo_alerts"].push_back({{"step", a.step_index},
                                   {"rank", a.addr.rank},
                                   {"bank", a.addr.bank},
                                   {"row", a.addr.row},
                                   {"counter", a.counter_value}});
    }
    j["total_activations"] = total_activations;
    j["max_row_counter"] = max_row_counter;
    j["per_row_histogram"] = nlohmann::json::array();
    for (const auto& [addr, count] : per_row_histogram) {
        j["per_row_histogram"].push_back(
            {{"rank", addr.rank}, {"bank", addr.bank}, {"row", addr.row}, {"count", count}});
    }
    return j.dump(2);
}

} // namespace memattest
