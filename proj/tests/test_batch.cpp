#include "doctest.h"
#include "support.hpp"

#include "rimdiag/batch.hpp"
#include "rimdiag/errors.hpp"

using namespace rimdiag;

namespace {

const MachineConfig& cfg() { return testing::reference_config(); }

std::vector<std::uint64_t> seeds(int n) {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint64_t>(i) * 7919u);
    return out;
}

} // namespace

TEST_CASE("parallel simulation matches the serial reference") {
    for (auto kind : kAllFaultKinds) {
        const FaultSpec f{kind, {}, {}};
        CHECK(simulate_runs(cfg(), f, seeds(40)) == simulate_runs_serial(cfg(), f, seeds(40)));
    }
    CHECK_THROWS_AS(simulate_runs(cfg(), {FaultKind::PartBroken, 1.0, {}}, seeds(3)), InvalidFault);
}

TEST_CASE("parallel diagnosis matches the serial reference") {
    std::vector<Trace> traces;
    for (auto kind : kAllFaultKinds) {
        auto runs = simulate_runs_serial(cfg(), {kind, {}, {}}, seeds(8));
        traces.insert(traces.end(), runs.begin(), runs.end());
    }
    // one item that cannot be diagnosed must not sink the batch
    Trace broken;
    broken.verdict = Verdict::not_ok(StationIndex{6});
    broken.events = {{0.0, "ghost", 1.0}};
    traces.push_back(broken);

    for (auto a : {Algorithm::StepWise, Algorithm::MultiStep}) {
        const auto par = diagnose_batch(a, cfg().process, cfg().expected, traces);
        const auto ser = diagnose_batch_serial(a, cfg().process, cfg().expected, traces);
        REQUIRE(par.size() == traces.size());
        REQUIRE(ser.size() == traces.size());
        for (std::size_t i = 0; i < traces.size(); ++i) {
            CHECK(par[i].report.has_value() == ser[i].report.has_value());
            CHECK(static_cast<bool>(par[i].error) == static_cast<bool>(ser[i].error));
            if (par[i].report) CHECK(render_report(*par[i].report) == render_report(*ser[i].report));
            if (traces[i].verdict.ok()) CHECK_FALSE(par[i].report.has_value());
        }
        CHECK_THROWS_AS(std::rethrow_exception(par.back().error), UnknownSensorInTrace);
    }
}
