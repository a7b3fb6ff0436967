#pragma once

// Consistency checking of measured sensor traces against expected values.
//
// A step formula is a conjunction of closed interval bounds: one per expected
// sensor of the step and one per timing window (the step's transitions plus its
// outbound rotation). Deciding it against a step's events is direct interval
// evaluation; every violated bound is reported.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimdiag/process_model.hpp"

namespace rimdiag {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double x) const { return lower <= x && x <= upper; }
    bool operator==(const Interval&) const = default;
};

struct ExpectedValue {
    SensorId sensor;
    double nominal = 0.0;
    double tol_below = 0.0;
    double tol_above = 0.0;

    Interval admissible() const { return {nominal - tol_below, nominal + tol_above}; }
    bool operator==(const ExpectedValue&) const = default;
};

/// Expected duration of a timing with its (possibly asymmetric) tolerance.
struct TimingTolerance {
    double nominal = 0.0;
    double tol_below = 0.0;
    double tol_above = 0.0;

    Interval admissible() const { return {nominal - tol_below, nominal + tol_above}; }
    bool operator==(const TimingTolerance&) const = default;
};

struct ExpectedValueSet {
    std::map<SensorId, ExpectedValue> values;
    std::map<TimingId, TimingTolerance> timing_windows;

    bool operator==(const ExpectedValueSet&) const = default;
};

/// Reads the `expected_values` section of a machine document (or the section
/// itself). Timing windows
/// are centred on the nominal durations in m's timings. Throws SchemaError or
/// ReferenceError.
ExpectedValueSet load_expected_values(const nlohmann::json& doc, const ProcessDescription& m);

struct TraceEvent {
    double time = 0.0;  // internal time, seconds
    SensorId sensor;
    double value = 0.0;

    bool operator==(const TraceEvent&) const = default;
};

struct ValueConstraint {
    SensorId sensor;
    Interval bounds;
};

struct TimingConstraint {
    TimingId id;
    Interval window;
    EventRole start;
    EventRole end;
};

struct StepFormula {
    StationIndex step;
    std::vector<ValueConstraint> value_constraints;
    std::vector<TimingConstraint> timing_constraints;
};

enum class SatStatus { Sat, Unsat };
enum class ViolationKind { Value, Timing };

struct Violation {
    ViolationKind kind = ViolationKind::Value;
    std::string subject;             // sensor id or timing id
    std::optional<double> observed;  // nullopt: no reading (missing)
    Interval admissible;

    bool operator==(const Violation&) const = default;
};

struct SatResult {
    SatStatus status = SatStatus::Sat;
    std::vector<Violation> violations;

    bool sat() const { return status == SatStatus::Sat; }
};

StepFormula build_step_formula(const ExpectedValueSet& e, const ProcessDescription& m, StationIndex step);

/// Value bounds hold when any event of the sensor lies inside them; a violated
/// bound reports the latest reading. Timing bounds apply to the duration
/// between the selected start and end events.
SatResult check_sat(const StepFormula& f, std::span<const TraceEvent> events);

/// Violated subjects: value conflicts first, then timing conflicts, each sorted.
/// Throws NotUnsat for a satisfiable result.
std::vector<std::string> extract_conflict_names(const SatResult& r);

/// A fault seen at `origin` that more than one candidate explains.
struct MemoryEntry {
    StationIndex origin;
    Violation trigger;
    std::vector<CandidateCause> candidates;
    std::map<std::string, Discriminator> discriminators;  // by candidate id
};

struct ExplanationMemory {
    std::vector<MemoryEntry> entries;
    bool empty() const { return entries.empty(); }
};

struct MemoryResolution {
    enum class Status { Confirmed, StillAmbiguous };
    Status status = Status::StillAmbiguous;
    std::optional<CandidateCause> confirmed;
    std::optional<MemoryEntry> entry;  // the collapsed entry
};

/// Uses the events of `step` to settle one remembered ambiguity with origin
/// later than `step`. A candidate is confirmed when it is the only one whose
/// discriminator fires here and every rival tool's sensors at this step are
/// consistent. The confirmed entry is removed from `z`; nothing else changes.
MemoryResolution check_sat_with_memory(const ExpectedValueSet& e, const ProcessDescription& m,
                                       StationIndex step, std::span<const TraceEvent> events,
                                       ExplanationMemory& z);

} // namespace rimdiag
