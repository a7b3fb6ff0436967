#include "doctest.h"
#include "support.hpp"

#include "rimdiag/errors.hpp"

using namespace rimdiag;

namespace {

const ProcessDescription& ref() { return testing::reference_config().process; }
const ExpectedValueSet& ref_e() { return testing::reference_config().expected; }

StepFormula pressure_only() { return {StationIndex{4}, {{"st4.pressure", {4.5, 5.5}}}, {}}; }

StepFormula jack_timing() {
    return {StationIndex{4},
            {},
            {{"u4", {0.4, 0.7}, {"st4.jack_cylinder.position", Occurrence::First},
              {"st4.jack_cylinder.position", Occurrence::Last}}}};
}

} // namespace

TEST_CASE("step 4 formula") {
    const auto f = build_step_formula(ref_e(), ref(), StationIndex{4});
    REQUIRE(f.value_constraints.size() == 2);
    CHECK(f.value_constraints[0].sensor == "st4.jack_cylinder.position");
    CHECK(f.value_constraints[0].bounds == Interval{1, 1});
    CHECK(f.value_constraints[1].sensor == "st4.pressure");
    CHECK(f.value_constraints[1].bounds == Interval{4.5, 5.5});
    std::vector<TimingId> ids;
    for (const auto& t : f.timing_constraints) ids.push_back(t.id);
    CHECK(ids == std::vector<TimingId>{"u4", "r4"});
    CHECK(f.timing_constraints[0].window.lower == doctest::Approx(0.4));
    CHECK(f.timing_constraints[0].window.upper == doctest::Approx(0.7));
}

TEST_CASE("eject station formula holds only its rotation window") {
    const auto f = build_step_formula(ref_e(), ref(), StationIndex{7});
    CHECK(f.value_constraints.empty());
    REQUIRE(f.timing_constraints.size() == 1);
    CHECK(f.timing_constraints[0].id == "r7");
    CHECK_THROWS_AS(build_step_formula(ref_e(), ref(), StationIndex{0}), UnknownStep);
}

TEST_CASE("value constraint containment") {
    std::vector<TraceEvent> ok = {{1.0, "st4.pressure", 5.2}};
    CHECK(check_sat(pressure_only(), ok).sat());

    std::vector<TraceEvent> low = {{1.0, "st4.pressure", 3.9}};
    const auto r = check_sat(pressure_only(), low);
    CHECK_FALSE(r.sat());
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == Violation{ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}});
}

TEST_CASE("timing window violation") {
    std::vector<TraceEvent> evs = {{0.2, "st4.jack_cylinder.position", 0}, {1.05, "st4.jack_cylinder.position", 1}};
    const auto r = check_sat(jack_timing(), evs);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].kind == ViolationKind::Timing);
    CHECK(*r.violations[0].observed == doctest::Approx(0.85));
}

TEST_CASE("missing readings are violations, not errors") {
    std::vector<TraceEvent> none;
    const auto r = check_sat(pressure_only(), none);
    REQUIRE(r.violations.size() == 1);
    CHECK_FALSE(r.violations[0].observed.has_value());
    const auto t = check_sat(jack_timing(), none);
    REQUIRE(t.violations.size() == 1);
    CHECK_FALSE(t.violations[0].observed.has_value());
}

TEST_CASE("any matching event satisfies, the latest is reported") {
    std::vector<TraceEvent> evs = {{0.1, "st4.pressure", 3.0}, {0.2, "st4.pressure", 5.0}};
    CHECK(check_sat(pressure_only(), evs).sat());
    std::vector<TraceEvent> bad = {{0.1, "st4.pressure", 3.0}, {0.2, "st4.pressure", 6.0}};
    CHECK(*check_sat(pressure_only(), bad).violations.at(0).observed == 6.0);
}

TEST_CASE("asymmetric tolerance") {
    ExpectedValue ev{"x", 5.0, 0.5, 0.2};
    StepFormula f{StationIndex{1}, {{"x", ev.admissible()}}, {}};
    std::vector<TraceEvent> high = {{0.0, "x", 5.3}};
    std::vector<TraceEvent> low = {{0.0, "x", 4.6}};
    CHECK_FALSE(check_sat(f, high).sat());
    CHECK(check_sat(f, low).sat());
}

TEST_CASE("conflict names") {
    SatResult single{SatStatus::Unsat, {{ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}}}};
    CHECK(extract_conflict_names(single) == std::vector<std::string>{"st4.pressure"});

    SatResult both{SatStatus::Unsat,
                   {{ViolationKind::Timing, "u4", 0.85, {0.4, 0.7}},
                    {ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}},
                    {ViolationKind::Value, "st4.jack_cylinder.position", 0, {1, 1}}}};
    CHECK(extract_conflict_names(both) ==
          std::vector<std::string>{"st4.jack_cylinder.position", "st4.pressure", "u4"});

    CHECK_THROWS_AS(extract_conflict_names(SatResult{}), NotUnsat);
}

TEST_CASE("check_sat agrees with the brute-force oracle") {
    std::mt19937_64 rng(20230427);
    int mismatches = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto inst = testing::random_instance(rng);
        const auto got = check_sat(inst.formula, inst.events);
        const auto want = testing::oracle(inst.formula, inst.events);
        if (got.sat() != want.sat || testing::violated_subjects(got) != want.violated) ++mismatches;
        // each violated constraint appears exactly once
        if (got.violations.size() != want.violated.size()) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("monotonicity") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        auto inst = testing::random_instance(rng);
        if (inst.formula.value_constraints.empty()) continue;
        inst.formula.timing_constraints.clear();
        const auto& c = inst.formula.value_constraints.front();
        const auto base = check_sat(inst.formula, inst.events);

        auto more = inst.events;
        more.push_back({100.0, c.sensor, c.bounds.lower});
        if (base.sat()) CHECK(check_sat(inst.formula, more).sat());

        std::vector<TraceEvent> fewer;
        for (const auto& ev : inst.events) {
            if (ev.sensor != c.sensor) fewer.push_back(ev);
        }
        const auto still = testing::violated_subjects(check_sat(inst.formula, fewer));
        for (const auto& v : base.violations) CHECK(still.count("v:" + v.subject) == 1);
    }
}

TEST_CASE("memory resolution with station-3 evidence") {
    const auto& m = ref();
    const auto& rule = m.causal_rules.front();
    auto fresh = [&] {
        ExplanationMemory z;
        z.entries.push_back({StationIndex{4},
                             {ViolationKind::Value, "st4.pressure", 3.9, {4.5, 5.5}},
                             rule.candidates,
                             rule.discriminators});
        return z;
    };

    std::vector<TraceEvent> shifted = {{0.1, "st3.feeder.position", 0.0},
                                       {0.6, "st3.feeder.position", 12.4},
                                       {1.8, "st3.index", 0},
                                       {2.8, "st3.index", 1}};
    auto z = fresh();
    const auto r = check_sat_with_memory(ref_e(), m, StationIndex{3}, shifted, z);
    REQUIRE(r.status == MemoryResolution::Status::Confirmed);
    CHECK(r.confirmed->id == "part_wrong_position");
    CHECK(z.empty());

    std::vector<TraceEvent> nominal = shifted;
    nominal[1].value = 12.0;
    auto z2 = fresh();
    CHECK(check_sat_with_memory(ref_e(), m, StationIndex{3}, nominal, z2).status ==
          MemoryResolution::Status::StillAmbiguous);
    CHECK(z2.entries.size() == 1);

    ExplanationMemory empty;
    CHECK(check_sat_with_memory(ref_e(), m, StationIndex{3}, shifted, empty).status ==
          MemoryResolution::Status::StillAmbiguous);

    // evidence never flows from a later step
    auto z3 = fresh();
    CHECK(check_sat_with_memory(ref_e(), m, StationIndex{5}, shifted, z3).status ==
          MemoryResolution::Status::StillAmbiguous);
}

TEST_CASE("expected values must refer to V") {
    auto doc = testing::reference_doc();
    doc["expected_values"]["sensors"]["st9.ghost"] = {{"nominal", 1}, {"tol_below", 0}, {"tol_above", 0}};
    CHECK_THROWS_AS(load_expected_values(doc, ref()), ReferenceError);

    auto neg = testing::reference_doc();
    neg["expected_values"]["sensors"]["st4.pressure"]["tol_below"] = -1;
    CHECK_THROWS_AS(load_expected_values(neg, ref()), SchemaError);
}
