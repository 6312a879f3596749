#include "memattest/measurement.hpp"

#include <charconv>

#include "memattest/error.hpp"

namespace memattest {

namespace {

std::string escape_value(const std::string& v) {
    std::string out;
    out.reserve(v.size());
    for (char c : v) {
        if (c == '\\' || c == '|' || c == '=') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string unescape_value(const std::string& v) {
    std::string out;
    out.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '\\') {
            if (i + 1 >= v.size()) {
                throw Error(ErrorCode::MalformedJson, "dangling escape in measurement value");
            }
            out.push_back(v[++i]);
        } else {
            out.push_back(v[i]);
        }
    }
    return out;
}

// Splits on unescaped '|'.
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            cur.push_back(line[i]);
            cur.push_back(line[++i]);
        } else if (line[i] == '|') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(line[i]);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

uint64_t parse_u64(const std::string& s, const char* what) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(ErrorCode::MalformedJson, std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

// Expects "key=value" with the exact key; returns the unescaped value.
std::string take_kv(const std::string& field, const std::string& key) {
    std::string prefix = key + "=";
    // The key itself never contains escapes; match literally.
    if (field.size() < prefix.size() || field.compare(0, prefix.size(), prefix) != 0) {
        throw Error(ErrorCode::MalformedJson, "expected field '" + key + "'");
    }
    return unescape_value(field.substr(prefix.size()));
}

} // namespace

Bytes canonical_encode(const Measurement& m) {
    std::string line;
    if (const auto* mce = std::get_if<McePayload>(&m.payload)) {
        line = "MCE|" + std::to_string(m.sequence_no) + "|" + std::to_string(m.timestamp_ms) +
               "|error_type=" + escape_value(mce->error_type) +
               "|address=" + std::to_string(mce->address);
    } else {
        const auto& abo = std::get<AboPayload>(m.payload);
        line = "ABO|" + std::to_string(m.sequence_no) + "|" + std::to_string(m.timestamp_ms) +
               "|rank=" + std::to_string(abo.addr.rank) + "|bank=" + std::to_string(abo.addr.bank) +
               "|row=" + std::to_string(abo.addr.row) +
               "|counter=" + std::to_string(abo.counter_value);
    }
    return to_bytes(line);
}

Measurement canonical_decode(const Bytes& bytes) {
    auto fields = split_fields(to_string_raw(bytes));
    if (fields.size() < 3) {
        throw Error(ErrorCode::MalformedJson, "truncated measurement record");
    }
    Measurement m;
    m.sequence_no = parse_u64(fields[1], "sequence_no");
    m.timestamp_ms = parse_u64(fields[2], "timestamp");
    if (fields[0] == "MCE") {
        if (fields.size() != 5) {
            throw Error(ErrorCode::MalformedJson, "MCE record wants 5 fields");
        }
        McePayload p;
        p.error_type = take_kv(fields[3], "error_type");
        p.address = parse_u64(take_kv(fields[4], "address"), "address");
        m.payload = std::move(p);
    } else if (fields[0] == "ABO") {
        if (fields.size() != 7) {
            throw Error(ErrorCode::MalformedJson, "ABO record wants 7 fields");
        }
        AboPayload p;
        p.addr.rank = static_cast<uint32_t>(parse_u64(take_kv(fields[3], "rank"), "rank"));
        p.addr.bank = static_cast<uint32_t>(parse_u64(take_kv(fields[4], "bank"), "bank"));
        p.addr.row = static_cast<uint32_t>(parse_u64(take_kv(fields[5], "row"), "row"));
        p.counter_value = parse_u64(take_kv(fields[6], "counter"), "counter");
        m.payload = std::move(p);
    } else {
        throw Error(ErrorCode::MalformedJson, "unknown measurement kind '" + fields[0] + "'");
    }
    return m;
}

} // namespace memattest
