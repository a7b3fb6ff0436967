// Serial reference against the OpenMP batch kernels.

#include <benchmark/benchmark.h>

#include "rimdiag/batch.hpp"
#include "rimdiag/cli.hpp"

using namespace rimdiag;

namespace {

const MachineConfig& cfg() {
    static const MachineConfig c = load_machine_config(RIMDIAG_REFERENCE_CONFIG);
    return c;
}

std::vector<std::uint64_t> seeds(std::int64_t n) {
    std::vector<std::uint64_t> out;
    for (std::int64_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint64_t>(i));
    return out;
}

std::vector<Trace> mixed_traces(std::int64_t n) {
    std::vector<Trace> out;
    const auto s = seeds(n);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const FaultSpec f{kAllFaultKinds[1 + i % 5], {}, {}};
        out.push_back(simulate_product_run(cfg(), f, s[i]));
    }
    return out;
}

void BM_SimulateSerial(benchmark::State& state) {
    const auto s = seeds(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_runs_serial(cfg(), {FaultKind::PartWrongPosition, {}, {}}, s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SimulateParallel(benchmark::State& state) {
    const auto s = seeds(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_runs(cfg(), {FaultKind::PartWrongPosition, {}, {}}, s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DiagnoseSerial(benchmark::State& state) {
    const auto traces = mixed_traces(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(diagnose_batch_serial(Algorithm::MultiStep, cfg().process, cfg().expected, traces));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DiagnoseParallel(benchmark::State& state) {
    const auto traces = mixed_traces(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(diagnose_batch(Algorithm::MultiStep, cfg().process, cfg().expected, traces));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_SimulateSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_SimulateParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_DiagnoseSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_DiagnoseParallel)->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
