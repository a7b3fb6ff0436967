#pragma once

// Many independent products at once. Each item is diagnosed or simulated on
// its own, so the parallel versions only split the loop; results keep input
// order and match the serial versions exactly.

#include <cstdint>
#include <exception>
#include <optional>
#include <vector>

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/simulator.hpp"
#include "rimdiag/trace.hpp"

namespace rimdiag {

/// Outcome for one trace. OK traces are not diagnosed; a failing item keeps
/// its exception instead of aborting the batch.
struct BatchItem {
    std::optional<DiagnosisReport> report;
    std::exception_ptr error;
};

std::vector<BatchItem> diagnose_batch(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                                      const std::vector<Trace>& traces);
std::vector<BatchItem> diagnose_batch_serial(Algorithm algorithm, const ProcessDescription& m,
                                             const ExpectedValueSet& e, const std::vector<Trace>& traces);

/// One product run per seed.
std::vector<Trace> simulate_runs(const MachineConfig& cfg, const FaultSpec& fault,
                                 const std::vector<std::uint64_t>& seeds);
std::vector<Trace> simulate_runs_serial(const MachineConfig& cfg, const FaultSpec& fault,
                                        const std::vector<std::uint64_t>& seeds);

} // namespace rimdiag
