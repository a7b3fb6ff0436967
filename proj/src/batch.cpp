#include "rimdiag/batch.hpp"

#include <cstddef>

#include "rimdiag/errors.hpp"

namespace rimdiag {

namespace {

BatchItem diagnose_one(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                       const Trace& trace) {
    BatchItem item;
    if (trace.verdict.ok()) return item;
    try {
        const auto trigger = station_with_role(m, StationRole::EjectNotOk);
        if (!trigger) throw UnknownStep("process has no Not-OK eject station");
        item.report = diagnose(algorithm, m, e, trace.events, *trigger);
    } catch (...) {
        item.error = std::current_exception();
    }
    return item;
}

} // namespace

std::vector<BatchItem> diagnose_batch_serial(Algorithm algorithm, const ProcessDescription& m,
                                             const ExpectedValueSet& e, const std::vector<Trace>& traces) {
    std::vector<BatchItem> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(diagnose_one(algorithm, m, e, t));
    return out;
}

std::vector<BatchItem> diagnose_batch(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                                      const std::vector<Trace>& traces) {
    std::vector<BatchItem> out(traces.size());
    const auto n = static_cast<std::ptrdiff_t>(traces.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = diagnose_one(algorithm, m, e, traces[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<Trace> simulate_runs_serial(const MachineConfig& cfg, const FaultSpec& fault,
                                        const std::vector<std::uint64_t>& seeds) {
    check_fault(cfg, fault);
    std::vector<Trace> out;
    out.reserve(seeds.size());
    for (auto seed : seeds) out.push_back(simulate_product_run(cfg, fault, seed));
    return out;
}

std::vector<Trace> simulate_runs(const MachineConfig& cfg, const FaultSpec& fault,
                                 const std::vector<std::uint64_t>& seeds) {
    // Validated up front so no exception has to leave the parallel region.
    check_fault(cfg, fault);
    std::vector<Trace> out(seeds.size());
    const auto n = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = simulate_product_run(cfg, fault, seeds[k]);
    }
    return out;
}

} // namespace rimdiag
