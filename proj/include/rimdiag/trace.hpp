#pragma once

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "rimdiag/constraint_core.hpp"

namespace rimdiag {

struct Verdict {
    enum class Kind { Ok, NotOk };
    Kind kind = Kind::Ok;
    std::optional<StationIndex> station;  // detecting station when Not-OK

    bool ok() const { return kind == Kind::Ok; }
    static Verdict good() { return {}; }
    static Verdict not_ok(StationIndex s) { return {Kind::NotOk, s}; }
    bool operator==(const Verdict&) const = default;
};

/// One product's run through the machine, in internal time.
struct Trace {
    int product_id = 1;
    std::vector<TraceEvent> events;
    Verdict verdict;

    bool operator==(const Trace&) const = default;
};

/// Index cycle boundary in the machine log: which product sits at each
/// station (index 0 is station 1; 0 marks an empty nest).
struct CycleRecord {
    int cycle = 0;
    double time = 0.0;
    std::vector<int> occupancy;

    bool operator==(const CycleRecord&) const = default;
};

using LogRecord = std::variant<CycleRecord, TraceEvent>;

/// Single merged stream of the whole machine on the global clock.
struct MachineLog {
    std::vector<LogRecord> records;
    bool operator==(const MachineLog&) const = default;
};

// JSON-lines trace file: one {"t","sensor","value"} object per event followed
// by a trailer {"verdict": "OK"|"NotOK", "station"?, "product_id"}.
void write_trace_jsonl(std::ostream& out, const Trace& trace);
Trace read_trace_jsonl(std::istream& in);  // throws MalformedTrace

void write_machine_log_jsonl(std::ostream& out, const MachineLog& log);
MachineLog read_machine_log_jsonl(std::istream& in);  // throws MalformedLog

} // namespace rimdiag
