#include "doctest.h"
#include "support.hpp"

#include <map>
#include <sstream>

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/errors.hpp"

using namespace rimdiag;

namespace {

const MachineConfig& cfg() { return testing::reference_config(); }
const ProcessDescription& ref() { return cfg().process; }

Trace run(FaultKind kind, std::uint64_t seed = 0) { return simulate_product_run(cfg(), {kind, {}, {}}, seed); }

// Oracle view of every step of a trace.
std::map<int, testing::OracleVerdict> judge(const Trace& t) {
    std::map<int, testing::OracleVerdict> out;
    const auto slices = slice_trace_by_step(ref(), t.events);
    for (const auto& [station, events] : slices) {
        out[station.value] = testing::oracle(build_step_formula(cfg().expected, ref(), station), events);
    }
    return out;
}

std::map<SensorId, std::vector<std::pair<double, double>>> by_sensor(const Trace& t) {
    std::map<SensorId, std::vector<std::pair<double, double>>> out;
    for (const auto& ev : t.events) out[ev.sensor].emplace_back(ev.time, ev.value);
    return out;
}

} // namespace

TEST_CASE("fault names round-trip") {
    for (auto k : kAllFaultKinds) CHECK(parse_fault_kind(fault_kind_name(k)) == k);
    CHECK_FALSE(parse_fault_kind("bogus").has_value());
}

TEST_CASE("reference schedule covers every sensor") { CHECK(validate_machine(cfg()).empty()); }

TEST_CASE("clean run") {
    const auto t = run(FaultKind::None, 3);
    CHECK(t.verdict.ok());
    for (const auto& [step, v] : judge(t)) CHECK_MESSAGE(v.sat, "step " << step);
}

TEST_CASE("timing fault violates only the jack stroke window") {
    const auto t = run(FaultKind::TimingJackCylinder, 5);
    CHECK(t.verdict == Verdict::not_ok(StationIndex{6}));
    const auto j = judge(t);
    CHECK(j.at(4).violated == std::set<std::string>{"t:u4"});
    CHECK(j.at(6).violated == std::set<std::string>{"v:st6.tightness_probe"});
}

TEST_CASE("wrong part position") {
    const auto j = judge(run(FaultKind::PartWrongPosition, 5));
    CHECK(j.at(3).sat);  // within tolerance, outside the discriminator only
    CHECK(j.at(4).violated == std::set<std::string>{"v:st4.pressure"});
}

TEST_CASE("broken part is invisible before quality control") {
    const auto t = run(FaultKind::PartBroken, 9);
    CHECK(t.verdict == Verdict::not_ok(StationIndex{6}));
    for (const auto& [step, v] : judge(t)) {
        if (step == 6) continue;
        CHECK_MESSAGE(v.sat, "step " << step);
    }
}

TEST_CASE("broken pressure sensor reads stuck") {
    const auto t = simulate_product_run(cfg(), {FaultKind::PressureSensorBroken, 4.8, {}}, 2);
    for (const auto& ev : t.events) {
        if (ev.sensor == "st4.pressure") CHECK(ev.value == 4.8);
    }
    CHECK(t.verdict == Verdict::not_ok(StationIndex{6}));
}

TEST_CASE("invalid magnitudes") {
    CHECK_THROWS_AS(simulate_product_run(cfg(), {FaultKind::PartBroken, 1.0, {}}, 0), InvalidFault);
    CHECK_THROWS_AS(simulate_product_run(cfg(), {FaultKind::None, 1.0, {}}, 0), InvalidFault);
    CHECK_THROWS_AS(simulate_product_run(cfg(), {FaultKind::TimingJackCylinder, 0.1, {}}, 0), InvalidFault);
    CHECK_THROWS_AS(simulate_product_run(cfg(), {FaultKind::JackCylinderBroken, 1.0, {}}, 0), InvalidFault);
    CHECK_THROWS_AS(simulate_product_run(cfg(), {FaultKind::PartWrongPosition, 0.1, {}}, 0), InvalidFault);
    CHECK_NOTHROW(simulate_product_run(cfg(), {FaultKind::TimingJackCylinder, 0.5, {}}, 0));
}

TEST_CASE("fault locality") {
    const std::map<FaultKind, std::set<SensorId>> touched = {
        {FaultKind::None, {}},
        {FaultKind::TimingJackCylinder, {"st4.jack_cylinder.position"}},
        {FaultKind::PartWrongPosition, {"st3.feeder.position", "st4.pressure"}},
        {FaultKind::PressureSensorBroken, {"st4.pressure"}},
        {FaultKind::JackCylinderBroken, {"st4.jack_cylinder.position", "st4.pressure"}},
        {FaultKind::PartBroken, {}},
    };
    // the quality verdict and the ejector acknowledgements follow it
    const std::set<SensorId> verdict = {"st6.tightness_probe", "st7.eject_ack", "st8.eject_ack"};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto clean = by_sensor(run(FaultKind::None, seed));
        for (auto kind : kAllFaultKinds) {
            const auto faulty = by_sensor(run(kind, seed));
            REQUIRE(faulty.size() == clean.size());
            for (const auto& [sensor, events] : clean) {
                if (touched.at(kind).count(sensor) || (kind != FaultKind::None && verdict.count(sensor))) continue;
                CHECK_MESSAGE(faulty.at(sensor) == events, fault_kind_name(kind) << " moved " << sensor);
            }
        }
    }
}

TEST_CASE("ejector acknowledgements match the verdict") {
    for (auto kind : kAllFaultKinds) {
        const auto t = run(kind, 1);
        for (const auto& ev : t.events) {
            if (ev.sensor == "st7.eject_ack") CHECK(ev.value == (t.verdict.ok() ? 1.0 : 0.0));
            if (ev.sensor == "st8.eject_ack") CHECK(ev.value == (t.verdict.ok() ? 0.0 : 1.0));
        }
    }
}

TEST_CASE("clocked order") {
    for (auto kind : kAllFaultKinds) {
        const auto t = run(kind, 8);
        CHECK(t.events.front().time >= 0.0);
        int last_station = 0;
        for (const auto& ev : t.events) {
            const int s = station_of_sensor(ref(), ev.sensor)->value;
            CHECK(s >= last_station);
            last_station = s;
        }
        CHECK(std::is_sorted(t.events.begin(), t.events.end(),
                             [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; }));
    }
}

TEST_CASE("seeded determinism") {
    for (auto kind : kAllFaultKinds) CHECK(run(kind, 42) == run(kind, 42));
    CHECK_FALSE(run(FaultKind::None, 1) == run(FaultKind::None, 2));
}

TEST_CASE("single-product log demuxes to the product run") {
    for (auto kind : kAllFaultKinds) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const FaultSpec f{kind, {}, {}};
            const auto [traces, log] = simulate_machine(cfg(), 1, {f}, seed);
            const auto back = demux_log(log, cfg());
            REQUIRE(back.size() == 1);
            CHECK(back[0] == simulate_product_run(cfg(), f, seed));
            CHECK(traces[0] == back[0]);
        }
    }
}

TEST_CASE("ten clean products") {
    const auto [traces, log] = simulate_machine(cfg(), 10, {}, 4);
    CHECK(traces.size() == 10);
    for (const auto& t : traces) CHECK(t.verdict.ok());
    double last = -1.0;
    for (const auto& rec : log.records) {
        if (const auto* ev = std::get_if<TraceEvent>(&rec)) {
            CHECK(ev->time > last);
            last = ev->time;
        }
    }
    CHECK(demux_log(log, cfg()) == traces);
}

TEST_CASE("targeted injection") {
    const std::vector<FaultSpec> faults = {{FaultKind::None, {}, {}}, {FaultKind::TimingJackCylinder, {}, 2},
                                           {FaultKind::None, {}, {}}};
    const auto [targeted, targeted_log] = simulate_machine(cfg(), 3, faults, 0);
    CHECK(targeted[0].verdict.ok());
    CHECK_FALSE(targeted[1].verdict.ok());
    CHECK(targeted[2].verdict.ok());
    // two faults aimed at one product
    CHECK_THROWS_AS(simulate_machine(cfg(), 3, {{FaultKind::PartBroken, {}, {}}, {FaultKind::PartBroken, {}, 1}}, 0),
                    InvalidFault);

    const std::vector<FaultSpec> positional = {{FaultKind::None, {}, {}}, {FaultKind::TimingJackCylinder, {}, {}},
                                               {FaultKind::None, {}, {}}};
    const auto [traces, log] = simulate_machine(cfg(), 3, positional, 0);
    CHECK(traces[0].verdict.ok());
    CHECK_FALSE(traces[1].verdict.ok());
    CHECK(traces[2].verdict.ok());
    const auto back = demux_log(log, cfg());
    REQUIRE(back.size() == 3);
    CHECK_FALSE(back[1].verdict.ok());

    const auto [t2, l2] = simulate_machine(cfg(), 3, {{FaultKind::TimingJackCylinder, {}, 2}}, 0);
    CHECK(t2[0].verdict.ok());
    CHECK_FALSE(t2[1].verdict.ok());
    CHECK_THROWS_AS(simulate_machine(cfg(), 3, {{FaultKind::PartBroken, {}, 4}}, 0), InvalidFault);
    CHECK_THROWS_AS(simulate_machine(cfg(), 0, {}, 0), InvalidFault);
}

TEST_CASE("demux edge cases") {
    CHECK(demux_log(MachineLog{}, cfg()).empty());

    MachineLog orphan;
    orphan.records.emplace_back(TraceEvent{0.1, "st1.feeder.ack", 0});
    CHECK_THROWS_AS(demux_log(orphan, cfg()), MalformedLog);

    MachineLog empty_nest;
    empty_nest.records.emplace_back(CycleRecord{0, 0.0, {1, 0, 0, 0, 0, 0, 0, 0}});
    empty_nest.records.emplace_back(TraceEvent{0.1, "st2.cylinder.position", 0});
    CHECK_THROWS_AS(demux_log(empty_nest, cfg()), MalformedLog);

    MachineLog ghost;
    ghost.records.emplace_back(CycleRecord{0, 0.0, {1, 0, 0, 0, 0, 0, 0, 0}});
    ghost.records.emplace_back(TraceEvent{0.1, "ghost", 0});
    CHECK_THROWS_AS(demux_log(ghost, cfg()), MalformedLog);
}

TEST_CASE("log line rendering") {
    const auto* cyl = label_of_sensor(ref(), "st2.cylinder.position");
    REQUIRE(cyl);
    CHECK(render_log_line({0.1, "st2.cylinder.position", 0}, kLogEpoch, *cyl) ==
          "Thu Apr 27 11:18:58 2023   pneumatic cylinder in position 0");
    CHECK(render_log_line({1.0, "st4.pressure", 5.0}, kLogEpoch, ref()) == "Thu Apr 27 11:18:58 2023   pressure at 5.0");
    CHECK(render_log_line({1.0, "st6.tightness_probe", 1}, kLogEpoch, ref()) ==
          "Thu Apr 27 11:18:58 2023   tightness probe reading 1");

    const auto [traces, log] = simulate_machine(cfg(), 2, {}, 0);
    const auto text = render_machine_log(log, ref(), kLogEpoch);
    CHECK(text.rfind("Thu Apr 27 11:18:58 2023   base part feeder ack 0\n", 0) == 0);
}

TEST_CASE("trace file round-trip") {
    const auto t = run(FaultKind::PartWrongPosition, 6);
    std::stringstream ss;
    write_trace_jsonl(ss, t);
    CHECK(read_trace_jsonl(ss) == t);

    std::istringstream no_trailer(R"({"t":0.1,"sensor":"st1.feeder.ack","value":0})");
    CHECK_THROWS_AS(read_trace_jsonl(no_trailer), MalformedTrace);
    std::istringstream backwards(
        "{\"t\":0.2,\"sensor\":\"a\",\"value\":0}\n{\"t\":0.1,\"sensor\":\"a\",\"value\":0}\n{\"verdict\":\"OK\"}\n");
    CHECK_THROWS_AS(read_trace_jsonl(backwards), MalformedTrace);
    std::istringstream garbage("not json\n");
    CHECK_THROWS_AS(read_trace_jsonl(garbage), MalformedTrace);
}

TEST_CASE("machine log file round-trip") {
    const auto [traces, log] = simulate_machine(cfg(), 3, {{FaultKind::JackCylinderBroken, {}, {}}}, 1);
    std::stringstream ss;
    write_machine_log_jsonl(ss, log);
    const auto back = read_machine_log_jsonl(ss);
    CHECK(back == log);
    CHECK(demux_log(back, cfg()) == traces);
}
