#pragma once

// Deterministic simulator of the reference eight-station rotary indexing
// machine. Two views of the same behaviour:
//
//   * simulate_product_run  - one product through every station (product view)
//   * simulate_machine      - all stations working at once on consecutive
//                             products, merged into one log on a global clock
//
// Randomness is limited to benign jitter inside the tolerance bands (uniform
// within +-50% of each tolerance). Faults are injected deterministically.

#include <cstdint>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rimdiag/constraint_core.hpp"
#include "rimdiag/process_model.hpp"
#include "rimdiag/trace.hpp"

namespace rimdiag {

enum class FaultKind {
    None,
    TimingJackCylinder,
    PartWrongPosition,
    PressureSensorBroken,
    JackCylinderBroken,
    PartBroken,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::None,          FaultKind::TimingJackCylinder, FaultKind::PartWrongPosition,
    FaultKind::PressureSensorBroken, FaultKind::JackCylinderBroken, FaultKind::PartBroken,
};

std::string_view fault_kind_name(FaultKind kind);  // "timing-jack-cylinder", ...
std::optional<FaultKind> parse_fault_kind(std::string_view text);

/// magnitude, per kind:
///   TimingJackCylinder   extra seconds on the jack stroke (> its upper tolerance)
///   PartWrongPosition    offset of the placed part, within the feeder tolerance
///   PressureSensorBroken value the pressure sensor is stuck at
///   JackCylinderBroken   final position reported by the jack cylinder
///   None, PartBroken     must be empty
struct FaultSpec {
    FaultKind kind = FaultKind::None;
    std::optional<double> magnitude;
    std::optional<int> target_product;  // unset: position in the fault list

    bool operator==(const FaultSpec&) const = default;
};

enum class ValueSource {
    Fixed,         // `value`
    Expected,      // expected nominal plus jitter
    EjectIfOk,     // 1 when the product passed quality control, else 0
    EjectIfNotOk,  // 1 when it failed, else 0
};

/// One sensor report within a station's dwell. The time is `at` seconds after
/// the product arrives, or after the end of timing `after` when set; the end of
/// a timing is its start-role event plus the sampled duration.
struct Emission {
    SensorId sensor;
    double at = 0.0;
    TimingId after;
    ValueSource source = ValueSource::Fixed;
    double value = 0.0;
};

struct StationSchedule {
    StationIndex station;
    std::vector<Emission> emissions;
};

/// Names of the reference machine's elements that faults act on.
struct FaultTargets {
    SensorId feeder_position = "st3.feeder.position";
    SensorId jack_position = "st4.jack_cylinder.position";
    SensorId pressure = "st4.pressure";
    SensorId tightness_probe = "st6.tightness_probe";
    TimingId jack_stroke = "u4";
};

struct MachineConfig {
    ProcessDescription process;
    ExpectedValueSet expected;
    std::vector<StationSchedule> schedule;  // nominal behaviour, one per station
    double cycle_time = 3.0;
    FaultTargets targets;
};

/// Schedule of the reference machine; throws SchemaError if `process` lacks an
/// element it relies on.
MachineConfig reference_machine(ProcessDescription process, ExpectedValueSet expected);

std::vector<std::string> validate_machine(const MachineConfig& cfg);

/// Throws InvalidFault when the magnitude is inconsistent with the kind.
void check_fault(const MachineConfig& cfg, const FaultSpec& fault);

Trace simulate_product_run(const MachineConfig& cfg, const FaultSpec& fault, std::uint64_t seed,
                           int product_id = 1);

/// `faults` may be shorter than n_products; products without a fault run clean.
std::pair<std::vector<Trace>, MachineLog> simulate_machine(const MachineConfig& cfg, int n_products,
                                                           const std::vector<FaultSpec>& faults,
                                                           std::uint64_t seed = 0);

/// Per-product traces, internal time rebased to each product's entry.
/// Throws MalformedLog for events outside any product context.
std::vector<Trace> demux_log(const MachineLog& log, const MachineConfig& cfg);

/// OK, or Not-OK at the first quality-control station whose reading is out
/// of tolerance.
Verdict quality_verdict(const ProcessDescription& m, const ExpectedValueSet& e, std::span<const TraceEvent> events);

/// `<wall clock>   <sensor label> <phrase> <value>`, wall clock in UTC in the
/// classic ctime layout.
std::string render_log_line(const TraceEvent& ev, std::time_t wall_clock, const SensorLabel& label);
std::string render_log_line(const TraceEvent& ev, std::time_t wall_clock, const ProcessDescription& m);

/// Human-readable twin of the machine log (sensor events only).
std::string render_machine_log(const MachineLog& log, const ProcessDescription& m, std::time_t start);

/// Wall-clock origin used for rendered logs (Thu Apr 27 11:18:58 2023 UTC).
inline constexpr std::time_t kLogEpoch = 1682594338;

} // namespace rimdiag
