#pragma once

// Fault scenarios run through both algorithms and scored against the fault
// that was injected.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/simulator.hpp"

namespace rimdiag {

enum class Cell { Correct, Incorrect };

struct EvaluationRow {
    FaultKind fault = FaultKind::None;
    Cell stepwise = Cell::Incorrect;
    Cell multistep = Cell::Incorrect;

    bool operator==(const EvaluationRow&) const = default;
};

struct EvaluationMatrix {
    std::vector<EvaluationRow> rows;
    bool operator==(const EvaluationMatrix&) const = default;
};

/// Scenario order of the table.
inline constexpr FaultKind kEvaluatedFaults[] = {
    FaultKind::TimingJackCylinder, FaultKind::PartWrongPosition, FaultKind::PressureSensorBroken,
    FaultKind::JackCylinderBroken, FaultKind::PartBroken,
};

std::string_view fault_title(FaultKind kind);  // "Timing Jack Cylinder", ...

/// The pattern the reference machine is expected to reproduce.
EvaluationMatrix expected_matrix();

/// Cause a correct diagnosis must name, if the process model can express it.
std::optional<CandidateCause> ground_truth(const MachineConfig& cfg, FaultKind kind);

/// Correct iff the report settles on exactly the ground-truth cause.
bool diagnosis_correct(const DiagnosisReport& r, const std::optional<CandidateCause>& truth);

/// Pure function of (cfg, seed); scenarios may run in parallel.
EvaluationMatrix evaluate(const MachineConfig& cfg, std::uint64_t seed);

std::string render_matrix(const EvaluationMatrix& m);

/// One line per differing cell; empty when equal.
std::vector<std::string> matrix_diff(const EvaluationMatrix& got, const EvaluationMatrix& want);

} // namespace rimdiag
