#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "memattest/bytes.hpp"
#include "memattest/dram_sim.hpp"

namespace memattest {

struct McePayload {
    std::string error_type; // e.g. "CE", "UE"
    uint64_t address = 0;

    bool operator==(const McePayload&) const = default;
};

struct AboPayload {
    RowAddress addr;
    uint64_t counter_value = 0;

    bool operator==(const AboPayload&) const = default;
};

// One hardware-fault observation: the unit that is hashed into the PCR,
// encrypted, logged and counted by the verifier's heuristic.
struct Measurement {
    uint64_t sequence_no = 0;   // strictly increasing per boot session
    uint64_t timestamp_ms = 0;  // milliseconds since boot
    std::variant<McePayload, AboPayload> payload;

    bool is_mce() const { return std::holds_alternative<McePayload>(payload); }
    bool operator==(const Measurement&) const = default;
};

// Injective one-line text encoding, e.g.
//   MCE|1|42|error_type=UE|address=4096
//   ABO|2|43|rank=0|bank=1|row=7|counter=16
// Values escape `\`, `|` and `=`; key order is fixed per kind.
Bytes canonical_encode(const Measurement& m);
Measurement canonical_decode(const Bytes& bytes); // throws Error{MalformedJson}

} // namespace memattest
