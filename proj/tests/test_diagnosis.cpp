#include "doctest.h"
#include "support.hpp"

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/errors.hpp"

using namespace rimdiag;

namespace {

const MachineConfig& cfg() { return testing::reference_config(); }
const ProcessDescription& ref() { return cfg().process; }
constexpr StationIndex kTrigger{8};

Trace run(FaultKind kind, std::uint64_t seed = 0) { return simulate_product_run(cfg(), {kind, {}, {}}, seed); }

DiagnosisReport diag(Algorithm a, const Trace& t) { return diagnose(a, ref(), cfg().expected, t.events, kTrigger); }

const StepReport& step(const DiagnosisReport& r, int n) {
    for (const auto& s : r.steps) {
        if (s.step.value == n) return s;
    }
    throw std::logic_error("step not visited");
}

std::vector<std::string> names(const std::vector<CandidateCause>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.name());
    return out;
}

} // namespace

TEST_CASE("slicing a clean trace") {
    const auto slices = slice_trace_by_step(ref(), run(FaultKind::None).events);
    REQUIRE(slices.size() == 8);
    for (const auto& [station, events] : slices) {
        CHECK_FALSE(events.empty());
        for (const auto& ev : events) CHECK(station_of_sensor(ref(), ev.sensor) == station);
        CHECK(std::is_sorted(events.begin(), events.end(),
                             [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; }));
    }
    const auto empty = slice_trace_by_step(ref(), {});
    CHECK(empty.size() == 8);
    std::vector<TraceEvent> ghost = {{0.0, "ghost", 1.0}};
    CHECK_THROWS_AS(slice_trace_by_step(ref(), ghost), UnknownSensorInTrace);
}

TEST_CASE("classify_violation") {
    CHECK(classify_violation({ViolationKind::Timing, "r3", 1.4, {0.8, 1.2}}) == FaultClass::TimingFault);
    CHECK(classify_violation({ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}}) == FaultClass::ValueFault);
    CHECK(classify_violation({ViolationKind::Value, "st2.cylinder.position", std::nullopt, {0, 0}}) ==
          FaultClass::ValueFault);
}

TEST_CASE("candidate_causes") {
    const auto low = candidate_causes({ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}}, ref());
    CHECK(names(low) == std::vector<std::string>{"st4.jack_cylinder", "part in the wrong position"});
    CHECK(low[1].kind == CauseKind::UpstreamProductFault);
    CHECK(low[1].step == StationIndex{3});

    const auto missing = candidate_causes({ViolationKind::Value, "st2.cylinder.position", std::nullopt, {1, 1}}, ref());
    REQUIRE(missing.size() == 1);
    CHECK(missing[0].kind == CauseKind::ToolFault);
    CHECK(missing[0].tool == "st2.pneumatic_cylinder");

    const auto probe = candidate_causes({ViolationKind::Value, "st6.tightness_probe", 0.0, {1, 1}}, ref());
    REQUIRE(probe.size() == 1);
    CHECK(probe[0].kind == CauseKind::UpstreamProductFault);
    CHECK(probe[0].description == "st6.tightness_probe");

    // high pressure is outside the rule's direction
    const auto high = candidate_causes({ViolationKind::Value, "st4.pressure", 6.0, {4.5, 5.5}}, ref());
    CHECK(high.size() == 1);
}

TEST_CASE("timing fault at the jack cylinder") {
    for (auto a : {Algorithm::StepWise, Algorithm::MultiStep}) {
        const auto r = diag(a, run(FaultKind::TimingJackCylinder));
        CHECK(r.trigger.station == kTrigger);
        CHECK(r.trigger.detecting_station == StationIndex{6});
        CHECK(step(r, 4).outcome == StepOutcome::TimingFault);
        CHECK(step(r, 4).subject == "u4");
        REQUIRE(r.final.kind == FinalKind::Resolved);
        CHECK(r.final.causes.at(0).tool == "st4.jack_cylinder");
        CHECK(render_report(r).find("Error in step 4: Timing fault") != std::string::npos);
    }
}

TEST_CASE("part in the wrong position") {
    const auto t = run(FaultKind::PartWrongPosition);
    const auto one = diag(Algorithm::StepWise, t);
    CHECK(step(one, 4).outcome == StepOutcome::Ambiguous);
    CHECK(one.final.kind == FinalKind::MultipleCandidates);
    CHECK(names(one.final.causes) == std::vector<std::string>{"st4.jack_cylinder", "part in the wrong position"});

    const auto two = diag(Algorithm::MultiStep, t);
    REQUIRE(two.final.kind == FinalKind::Resolved);
    CHECK(two.final.causes.at(0).description == "part in the wrong position");
    CHECK(step(two, 4).evidence_step == StationIndex{3});
    CHECK(step(two, 3).resolves == std::vector<StationIndex>{{4}});
    CHECK(render_report(two).find("Explanation for fault in earlier step found!") != std::string::npos);
}

TEST_CASE("broken jack cylinder") {
    for (auto a : {Algorithm::StepWise, Algorithm::MultiStep}) {
        const auto r = diag(a, run(FaultKind::JackCylinderBroken));
        CHECK(step(r, 4).outcome == StepOutcome::DefiniteCause);
        REQUIRE(r.final.kind == FinalKind::Resolved);
        CHECK(r.final.causes.at(0).tool == "st4.jack_cylinder");
        CHECK(render_report(r).find("Most likely cause: st4.jack_cylinder") != std::string::npos);
    }
}

TEST_CASE("faults outside the model find no cause") {
    for (auto kind : {FaultKind::PressureSensorBroken, FaultKind::PartBroken}) {
        for (auto a : {Algorithm::StepWise, Algorithm::MultiStep}) {
            const auto r = diag(a, run(kind));
            CHECK(r.final.kind == FinalKind::NoCauseFound);
            CHECK(step(r, 6).outcome == StepOutcome::UnexplainedViolation);
        }
    }
}

TEST_CASE("clean traces report every step OK") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (auto a : {Algorithm::StepWise, Algorithm::MultiStep}) {
            const auto r = diag(a, run(FaultKind::None, seed));
            CHECK(r.final.kind == FinalKind::NoCauseFound);
            CHECK(r.steps.size() == 7);
            for (const auto& s : r.steps) CHECK(s.outcome == StepOutcome::Ok);
        }
    }
}

TEST_CASE("traversal runs backwards from the trigger") {
    const auto r = diag(Algorithm::StepWise, run(FaultKind::PartWrongPosition));
    std::vector<int> order;
    for (const auto& s : r.steps) order.push_back(s.step.value);
    CHECK(order == std::vector<int>{7, 6, 5, 4, 3, 2, 1});
}

TEST_CASE("multistep agrees whenever stepwise resolves") {
    for (auto kind : kAllFaultKinds) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto t = run(kind, seed);
            const auto one = diag(Algorithm::StepWise, t);
            if (one.final.kind != FinalKind::Resolved) continue;
            const auto two = diag(Algorithm::MultiStep, t);
            REQUIRE(two.final.kind == FinalKind::Resolved);
            CHECK(same_cause(one.final.causes.at(0), two.final.causes.at(0)));
        }
    }
}

TEST_CASE("timing takes precedence over value violations in a step") {
    auto t = run(FaultKind::TimingJackCylinder);
    for (auto& ev : t.events) {
        if (ev.sensor == "st4.pressure") ev.value = 3.9;
    }
    const auto r = diag(Algorithm::StepWise, t);
    CHECK(step(r, 4).outcome == StepOutcome::TimingFault);
}

TEST_CASE("rendering is deterministic") {
    const auto t = run(FaultKind::PartWrongPosition, 11);
    CHECK(render_report(diag(Algorithm::MultiStep, t)) == render_report(diag(Algorithm::MultiStep, t)));
    CHECK(report_to_json(diag(Algorithm::MultiStep, t)).dump() == report_to_json(diag(Algorithm::MultiStep, t)).dump());
}

TEST_CASE("trigger errors") {
    const auto t = run(FaultKind::TimingJackCylinder);
    std::vector<TraceEvent> truncated;
    for (const auto& ev : t.events) {
        if (station_of_sensor(ref(), ev.sensor)->value < 8) truncated.push_back(ev);
    }
    CHECK_THROWS_AS(diagnose_stepwise(ref(), cfg().expected, truncated, kTrigger), TraceIncomplete);
    CHECK_THROWS_AS(diagnose_stepwise(ref(), cfg().expected, t.events, StationIndex{42}), UnknownStep);
}

TEST_CASE("json report shape") {
    const auto j = report_to_json(diag(Algorithm::MultiStep, run(FaultKind::PartWrongPosition)));
    CHECK(j["algorithm"] == "multistep");
    CHECK(j["trigger"]["station"] == 8);
    CHECK(j["final"]["kind"] == "resolved");
    CHECK(j["final"]["causes"][0]["description"] == "part in the wrong position");
    CHECK(j["steps"].size() == 7);
}
