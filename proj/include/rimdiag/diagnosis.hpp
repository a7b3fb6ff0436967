#pragma once

// Product-perspective diagnosis. Once a product is flagged Not-OK, the steps it
// passed through are visited backwards from the reporting station. Each step's
// measured events are checked against the expected values; inconsistencies are
// mapped onto candidate causes through the process description.
//
// The step-wise algorithm reports every step on its own. The multi-step
// algorithm additionally remembers ambiguous explanations and settles them
// with evidence from earlier production steps.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rimdiag/constraint_core.hpp"
#include "rimdiag/process_model.hpp"

namespace rimdiag {

using StepSlices = std::map<StationIndex, std::vector<TraceEvent>>;

/// Partitions a product trace by owning station (V sensors and station
/// signals). All stations are present; events keep time order within a slice.
/// Throws UnknownSensorInTrace.
StepSlices slice_trace_by_step(const ProcessDescription& m, std::span<const TraceEvent> trace);

enum class FaultClass { TimingFault, ValueFault };

inline FaultClass classify_violation(const Violation& v) {
    return v.kind == ViolationKind::Timing ? FaultClass::TimingFault : FaultClass::ValueFault;
}

/// Same fault regardless of the id it was declared under.
bool same_cause(const CandidateCause& a, const CandidateCause& b);

/// Candidates for a value fault: a matching causal rule's list, else the tool
/// W maps the sensor onto, else an upstream fault named after the sensor.
std::vector<CandidateCause> candidate_causes(const Violation& v, const ProcessDescription& m);

/// Cause attributed to a violated timing window: the transition's tool when W
/// determines one, otherwise an upstream fault named after the timing.
CandidateCause timing_cause(const Timing& timing, const ProcessDescription& m);

enum class StepOutcome { Ok, TimingFault, DefiniteCause, Ambiguous, UnexplainedViolation };

struct StepReport {
    StationIndex step;
    StepOutcome outcome = StepOutcome::Ok;
    std::string subject;                     // TimingFault / UnexplainedViolation
    std::vector<CandidateCause> candidates;  // DefiniteCause: 1, Ambiguous: >= 2, TimingFault: 1
    std::vector<CandidateCause> alternatives;  // explanations this step could not tell apart
    std::optional<StationIndex> evidence_step;  // step whose observations settled the ambiguity
    std::vector<StationIndex> resolves;          // origin steps settled by this step's observations
    std::vector<Violation> violations;
};

enum class Algorithm { StepWise, MultiStep };

struct Trigger {
    StationIndex station;                      // station that reported the product Not-OK
    std::optional<StationIndex> detecting_station;  // QC station whose check failed
    std::optional<SensorId> sensor;
};

enum class FinalKind { Resolved, MultipleCandidates, NoCauseFound };

struct FinalDiagnosis {
    FinalKind kind = FinalKind::NoCauseFound;
    std::vector<CandidateCause> causes;
};

struct DiagnosisReport {
    Algorithm algorithm = Algorithm::StepWise;
    Trigger trigger;
    std::vector<StepReport> steps;  // visit order
    FinalDiagnosis final;
};

/// Throws UnknownStep for an invalid trigger, TraceIncomplete when the trace has
/// no events at the trigger station, UnknownSensorInTrace for foreign sensors.
DiagnosisReport diagnose_stepwise(const ProcessDescription& m, const ExpectedValueSet& e,
                                  std::span<const TraceEvent> trace, StationIndex trigger);
DiagnosisReport diagnose_multistep(const ProcessDescription& m, const ExpectedValueSet& e,
                                   std::span<const TraceEvent> trace, StationIndex trigger);
DiagnosisReport diagnose(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                         std::span<const TraceEvent> trace, StationIndex trigger);

std::string render_report(const DiagnosisReport& r);
nlohmann::json report_to_json(const DiagnosisReport& r);

std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view text);

} // namespace rimdiag
