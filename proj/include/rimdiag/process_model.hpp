#pragma once

// Process description of a rotary indexing machine as seen from the product:
// a linear sequence of production steps (one per station), the state
// transitions performed at each step, the expected timings, and the mappings
// of sensors onto transitions (V) and tools (W).

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rimdiag {

/// Position on the indexing table, 1-based. Equal to the production step.
struct StationIndex {
    int value = 0;
    auto operator<=>(const StationIndex&) const = default;
};

struct ProductState {
    int value = 0;
    auto operator<=>(const ProductState&) const = default;
};

using SensorId = std::string;
using ToolId = std::string;
using TimingId = std::string;

enum class StationRole { Input, Process, Feed, QualityControl, EjectOk, EjectNotOk };

/// How a sensor is rendered in the human-readable machine log.
struct SensorLabel {
    std::string label;
    std::string phrase;
    int decimals = 0;
    bool operator==(const SensorLabel&) const = default;
};

/// Event-only sensor owned by a station but not mapped onto a transition
/// (index-table locks, clamps, ejector acknowledgements). Used as timing roles.
struct StationSignal {
    SensorId sensor;
    SensorLabel label;
    bool operator==(const StationSignal&) const = default;
};

struct StateTransition {
    int id = 0;
    ProductState from_state;
    ProductState to_state;
    StationIndex station;
    std::string name;
    bool check = false;  // inspection only; may leave the state unchanged
    bool operator==(const StateTransition&) const = default;
};

struct ProductionStep {
    StationIndex index;
    StationRole role = StationRole::Process;
    std::string name;
    std::vector<StateTransition> transitions;
    std::vector<StationSignal> signals;
    bool operator==(const ProductionStep&) const = default;
};

struct Rotation {
    int id = 0;
    StationIndex from_position;
    StationIndex to_position;
    double expected_duration = 0.0;
    bool operator==(const Rotation&) const = default;
};

enum class Occurrence { First, Last };

/// Selects one event of a sensor within a step: its first or last report.
struct EventRole {
    SensorId sensor;
    Occurrence occurrence = Occurrence::First;
    bool operator==(const EventRole&) const = default;
};

enum class TimingKind { Transition, Rotation };

/// One entry of U. Its measured duration is end-event time minus start-event time.
struct Timing {
    TimingId id;
    TimingKind kind = TimingKind::Transition;
    int ref = 0;  // transition id or rotation id
    double nominal = 0.0;
    EventRole start;
    EventRole end;
    bool operator==(const Timing&) const = default;
};

struct SensorBinding {
    SensorId sensor;
    int transition = 0;
    SensorLabel label;
    bool operator==(const SensorBinding&) const = default;
};

struct ToolBinding {
    SensorId sensor;
    ToolId tool;
    bool operator==(const ToolBinding&) const = default;
};

enum class CauseKind { ToolFault, UpstreamProductFault };

struct CandidateCause {
    std::string id;
    CauseKind kind = CauseKind::ToolFault;
    ToolId tool;              // ToolFault
    std::string description;  // UpstreamProductFault
    StationIndex step;

    /// Tool id for tool faults, description otherwise.
    const std::string& name() const { return kind == CauseKind::ToolFault ? tool : description; }
    bool operator==(const CandidateCause&) const = default;
};

enum class Deviation { Below, Above, Missing, Any };

/// Tell-tale interval at an earlier step; a violation confirms its candidate.
struct Discriminator {
    SensorId sensor;
    double lower = 0.0;
    double upper = 0.0;
    bool operator==(const Discriminator&) const = default;
};

struct CausalRule {
    SensorId trigger_sensor;
    Deviation direction = Deviation::Any;
    std::vector<CandidateCause> candidates;
    std::map<std::string, Discriminator> discriminators;  // keyed by candidate id
    bool operator==(const CausalRule&) const = default;
};

struct ProcessDescription {
    int schema_version = 1;
    int state_count = 0;
    std::vector<ProductionStep> order;                // O
    std::vector<Rotation> rotations;
    std::vector<Timing> timings;                      // U
    std::vector<SensorBinding> sensor_to_transition;  // V
    std::vector<ToolBinding> sensor_to_tool;          // W
    std::vector<CausalRule> causal_rules;

    int station_count() const { return static_cast<int>(order.size()); }
    std::size_t transition_count() const;

    bool operator==(const ProcessDescription&) const = default;
};

enum class IssueKind {
    StationOrder,
    StationRole,
    StateOutOfRange,
    SilentTransition,
    EmptyProcessingStation,
    DuplicateTransition,
    DuplicateSensor,
    DuplicateToolBinding,
    UnknownTransition,
    ToolWithoutTransition,
    TimingArity,
    DuplicateTiming,
    MissingTiming,
    UnknownTimingTarget,
    TimingRoleOutsideStep,
    RotationNotAdjacent,
    RuleUnknownSensor,
    RuleNoCandidates,
    RuleUnknownTool,
    RuleUnknownCandidate,
    DiscriminatorNotEarlier,
};

struct ValidationIssue {
    IssueKind kind;
    std::string subject;
    std::string message;
};

std::string_view issue_name(IssueKind kind);

/// Parses the process-description part of a machine document. The
/// `expected_values` section must be present but is interpreted by
/// load_expected_values. Throws SchemaError, ReferenceError or OrderError.
ProcessDescription load_process_description(const nlohmann::json& doc);
ProcessDescription load_process_description_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Inverse of load_process_description. `expected_values` is emitted empty.
nlohmann::json serialize(const ProcessDescription& m);

std::vector<ValidationIssue> validate(const ProcessDescription& m);

const ProductionStep& step_at(const ProcessDescription& m, StationIndex step);
StationIndex next_station(const ProcessDescription& m, StationIndex step);

/// Sensors mapped by V onto a transition of `step`, ordered by id.
std::vector<SensorId> sensors_for_step(const ProcessDescription& m, StationIndex step);

/// W(sensor), or nullopt for measurement-only sensors. Throws UnknownSensor
/// when the sensor is not in dom(V).
std::optional<ToolId> tool_for_sensor(const ProcessDescription& m, const SensorId& sensor);

/// Owning station of any sensor known to m (V sensors and station signals).
std::optional<StationIndex> station_of_sensor(const ProcessDescription& m, const SensorId& sensor);

const SensorLabel* label_of_sensor(const ProcessDescription& m, const SensorId& sensor);
const StateTransition* find_transition(const ProcessDescription& m, int id);
const Timing* find_timing(const ProcessDescription& m, const TimingId& id);
const Rotation* find_rotation(const ProcessDescription& m, int id);

/// Station a timing belongs to: the transition's station, or the rotation's origin.
std::optional<StationIndex> station_of_timing(const ProcessDescription& m, const Timing& timing);

/// Timings of the step's transitions followed by its outbound rotation.
std::vector<const Timing*> timings_for_step(const ProcessDescription& m, StationIndex step);

/// Tool responsible for a timing: the unique W-image of the sensors mapped onto
/// its transition. Rotations and tool-less transitions yield nullopt.
std::optional<ToolId> tool_for_timing(const ProcessDescription& m, const Timing& timing);

/// Quality-control stations in product order.
std::vector<StationIndex> quality_stations(const ProcessDescription& m);
std::optional<StationIndex> station_with_role(const ProcessDescription& m, StationRole role);

} // namespace rimdiag
