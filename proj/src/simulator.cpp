#include "rimdiag/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/errors.hpp"

namespace rimdiag {

namespace {

// Event times live on a 10 us grid; each station adds its index in
// microseconds so no two stations ever report at the same instant.
using Ticks = std::int64_t;
constexpr double kTicksPerSecond = 1e6;
constexpr Ticks kGrid = 10;

Ticks to_grid(double seconds) { return static_cast<Ticks>(std::llround(seconds * kTicksPerSecond / kGrid)) * kGrid; }
double to_seconds(Ticks t) { return static_cast<double>(t) / kTicksPerSecond; }
Ticks to_ticks(double seconds) { return static_cast<Ticks>(std::llround(seconds * kTicksPerSecond)); }

class Jitter {
public:
    Jitter(std::uint64_t seed, int product) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(product)};
        gen_.seed(seq);
    }

    // Uniform in [-below/2, +above/2].
    double within(double below, double above) {
        const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        const double lo = -0.5 * below;
        const double hi = 0.5 * above;
        return lo + (hi - lo) * u;
    }

private:
    std::mt19937_64 gen_;
};

struct PlannedEvent {
    Ticks offset = 0;  // since arrival at the station
    SensorId sensor;
    double value = 0.0;
};

struct ProductPlan {
    std::vector<std::vector<PlannedEvent>> stations;  // index 0 is station 1
    Verdict verdict;
};

Ticks station_stagger(StationIndex s) { return s.value; }

const ExpectedValue& expected_of(const MachineConfig& cfg, const SensorId& sensor) {
    auto it = cfg.expected.values.find(sensor);
    if (it == cfg.expected.values.end()) {
        throw SchemaError(fmt::format("no expected value for simulated sensor '{}'", sensor));
    }
    return it->second;
}

double quality_fail_value(const MachineConfig& cfg) {
    return expected_of(cfg, cfg.targets.tightness_probe).admissible().lower - 1.0;
}

double low_pressure(const MachineConfig& cfg) {
    return expected_of(cfg, cfg.targets.pressure).admissible().lower - 0.6;
}

ProductPlan plan_product(const MachineConfig& cfg, const FaultSpec& fault, std::uint64_t seed, int product) {
    const auto& m = cfg.process;
    Jitter jitter(seed, product);
    ProductPlan plan;

    // Sampled first, in a fixed order, so a fault never shifts the jitter of
    // unrelated sensors.
    struct StationDraw {
        std::map<TimingId, Ticks> durations;
        std::vector<double> values;  // per emission
    };
    std::vector<StationDraw> draws;
    for (const auto& sched : cfg.schedule) {
        StationDraw d;
        for (const auto* u : timings_for_step(m, sched.station)) {
            const auto& tol = cfg.expected.timing_windows.at(u->id);
            d.durations[u->id] = to_grid(u->nominal + jitter.within(tol.tol_below, tol.tol_above));
        }
        for (const auto& em : sched.emissions) {
            double v = em.value;
            if (em.source == ValueSource::Expected) {
                const auto& ev = expected_of(cfg, em.sensor);
                v = ev.nominal + jitter.within(ev.tol_below, ev.tol_above);
            }
            d.values.push_back(v);
        }
        draws.push_back(std::move(d));
    }

    // Fault effects.
    auto override_value = [&](const SensorId& sensor, double value) {
        for (std::size_t s = 0; s < cfg.schedule.size(); ++s) {
            const auto& ems = cfg.schedule[s].emissions;
            for (std::size_t i = 0; i < ems.size(); ++i) {
                if (ems[i].sensor == sensor && ems[i].source == ValueSource::Expected) draws[s].values[i] = value;
            }
        }
    };
    const auto& t = cfg.targets;
    const bool faulty = fault.kind != FaultKind::None;
    switch (fault.kind) {
    case FaultKind::None:
    case FaultKind::PartBroken:
        break;
    case FaultKind::TimingJackCylinder: {
        const auto* u = find_timing(m, t.jack_stroke);
        const auto station = station_of_timing(m, *u)->value;
        draws[station - 1].durations[u->id] = to_grid(u->nominal + fault.magnitude.value_or(0.35));
        break;
    }
    case FaultKind::PartWrongPosition:
        override_value(t.feeder_position, expected_of(cfg, t.feeder_position).nominal + fault.magnitude.value_or(0.4));
        override_value(t.pressure, low_pressure(cfg));
        break;
    case FaultKind::PressureSensorBroken:
        override_value(t.pressure, fault.magnitude.value_or(expected_of(cfg, t.pressure).nominal));
        break;
    case FaultKind::JackCylinderBroken:
        override_value(t.jack_position, fault.magnitude.value_or(0.0));
        override_value(t.pressure, low_pressure(cfg));
        break;
    }
    if (faulty) override_value(t.tightness_probe, quality_fail_value(cfg));

    // Lay the emissions out in time.
    std::vector<TraceEvent> all;
    for (std::size_t s = 0; s < cfg.schedule.size(); ++s) {
        const auto& sched = cfg.schedule[s];
        std::vector<PlannedEvent> events;
        std::map<SensorId, std::pair<Ticks, Ticks>> seen;  // first, last
        for (std::size_t i = 0; i < sched.emissions.size(); ++i) {
            const auto& em = sched.emissions[i];
            Ticks at = to_grid(em.at);
            if (!em.after.empty()) {
                const auto* u = find_timing(m, em.after);
                const auto& span = seen.at(u->start.sensor);
                at += (u->start.occurrence == Occurrence::First ? span.first : span.second) +
                      draws[s].durations.at(u->id);
            }
            auto [it, fresh] = seen.try_emplace(em.sensor, at, at);
            if (!fresh) {
                it->second.first = std::min(it->second.first, at);
                it->second.second = std::max(it->second.second, at);
            }
            events.push_back({at, em.sensor, draws[s].values[i]});
        }
        std::stable_sort(events.begin(), events.end(),
                         [](const PlannedEvent& a, const PlannedEvent& b) { return a.offset < b.offset; });
        for (const auto& ev : events) all.push_back({to_seconds(ev.offset), ev.sensor, ev.value});
        plan.stations.push_back(std::move(events));
    }

    plan.verdict = quality_verdict(m, cfg.expected, all);
    for (std::size_t s = 0; s < cfg.schedule.size(); ++s) {
        const auto& ems = cfg.schedule[s].emissions;
        for (auto& ev : plan.stations[s]) {
            for (const auto& em : ems) {
                if (em.sensor != ev.sensor) continue;
                if (em.source == ValueSource::EjectIfOk) ev.value = plan.verdict.ok() ? 1.0 : 0.0;
                if (em.source == ValueSource::EjectIfNotOk) ev.value = plan.verdict.ok() ? 0.0 : 1.0;
            }
        }
    }
    return plan;
}

std::vector<TraceEvent> place(const MachineConfig& cfg, const ProductPlan& plan, Ticks entry,
                              Ticks cycle) {
    std::vector<TraceEvent> out;
    for (std::size_t s = 0; s < plan.stations.size(); ++s) {
        const StationIndex station = cfg.schedule[s].station;
        const Ticks base = entry + static_cast<Ticks>(station.value - 1) * cycle + station_stagger(station);
        for (const auto& ev : plan.stations[s]) out.push_back({to_seconds(base + ev.offset), ev.sensor, ev.value});
    }
    return out;
}

Emission fixed(SensorId sensor, double at, double value) {
    return {std::move(sensor), at, {}, ValueSource::Fixed, value};
}

Emission after(SensorId sensor, TimingId timing, ValueSource source, double value = 0.0) {
    return {std::move(sensor), 0.0, std::move(timing), source, value};
}

} // namespace

std::string_view fault_kind_name(FaultKind kind) {
    switch (kind) {
    case FaultKind::None: return "none";
    case FaultKind::TimingJackCylinder: return "timing-jack-cylinder";
    case FaultKind::PartWrongPosition: return "part-wrong-position";
    case FaultKind::PressureSensorBroken: return "pressure-sensor-broken";
    case FaultKind::JackCylinderBroken: return "jack-cylinder-broken";
    case FaultKind::PartBroken: return "part-broken";
    }
    return "?";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
    for (auto k : kAllFaultKinds) {
        if (fault_kind_name(k) == text) return k;
    }
    return std::nullopt;
}

MachineConfig reference_machine(ProcessDescription process, ExpectedValueSet expected) {
    MachineConfig cfg;
    cfg.process = std::move(process);
    cfg.expected = std::move(expected);

    auto st = [](int s) { return StationSchedule{StationIndex{s}, {}}; };
    auto index_events = [](StationSchedule& sched) {
        const auto n = std::to_string(sched.station.value);
        sched.emissions.push_back(fixed("st" + n + ".index", 1.8, 0.0));
        sched.emissions.push_back(after("st" + n + ".index", "r" + n, ValueSource::Fixed, 1.0));
    };

    auto s1 = st(1);
    s1.emissions = {fixed("st1.feeder.ack", 0.1, 0.0), after("st1.feeder.ack", "u1", ValueSource::Expected)};
    auto s2 = st(2);
    s2.emissions = {fixed("st2.cylinder.position", 0.1, 0.0),
                    after("st2.cylinder.position", "u2", ValueSource::Expected)};
    auto s3 = st(3);
    s3.emissions = {fixed("st3.feeder.position", 0.1, 0.0),
                    after("st3.feeder.position", "u3", ValueSource::Expected)};
    auto s4 = st(4);
    s4.emissions = {fixed("st4.jack_cylinder.position", 0.2, 0.0),
                    after("st4.jack_cylinder.position", "u4", ValueSource::Expected),
                    {"st4.pressure", 1.7, {}, ValueSource::Expected, 0.0}};
    auto s5 = st(5);
    s5.emissions = {fixed("st5.clamp", 0.1, 1.0), after("st5.dimension_probe", "u5", ValueSource::Expected)};
    auto s6 = st(6);
    s6.emissions = {fixed("st6.clamp", 0.1, 1.0), after("st6.tightness_probe", "u6", ValueSource::Expected)};
    auto s7 = st(7);
    s7.emissions = {{"st7.eject_ack", 0.3, {}, ValueSource::EjectIfOk, 0.0}};
    auto s8 = st(8);
    s8.emissions = {{"st8.eject_ack", 0.3, {}, ValueSource::EjectIfNotOk, 0.0}};

    for (auto* s : {&s1, &s2, &s3, &s4, &s5, &s6, &s7, &s8}) {
        index_events(*s);
        cfg.schedule.push_back(std::move(*s));
    }

    auto problems = validate_machine(cfg);
    if (!problems.empty()) {
        throw SchemaError(fmt::format("configuration does not describe the reference machine: {}",
                                      fmt::join(problems, "; ")));
    }
    return cfg;
}

std::vector<std::string> validate_machine(const MachineConfig& cfg) {
    std::vector<std::string> problems;
    const auto& m = cfg.process;
    if (static_cast<int>(cfg.schedule.size()) != m.station_count()) {
        problems.push_back(fmt::format("schedule covers {} stations, process has {}", cfg.schedule.size(),
                                       m.station_count()));
        return problems;
    }
    if (!(cfg.cycle_time > 0.0)) problems.push_back("cycle time must be positive");

    std::set<SensorId> emitted;
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const auto& sched = cfg.schedule[i];
        if (sched.station.value != static_cast<int>(i) + 1) {
            problems.push_back(fmt::format("schedule entry {} is for station {}", i + 1, sched.station.value));
            continue;
        }
        std::set<SensorId> seen_here;
        for (const auto& em : sched.emissions) {
            emitted.insert(em.sensor);
            if (station_of_sensor(m, em.sensor) != sched.station) {
                problems.push_back(fmt::format("'{}' is not a sensor of station {}", em.sensor, sched.station.value));
            }
            if (em.source == ValueSource::Expected && !cfg.expected.values.count(em.sensor)) {
                problems.push_back(fmt::format("'{}' has no expected value", em.sensor));
            }
            if (!em.after.empty()) {
                const auto* u = find_timing(m, em.after);
                if (!u || station_of_timing(m, *u) != sched.station) {
                    problems.push_back(fmt::format("'{}' follows unknown timing '{}'", em.sensor, em.after));
                } else if (!seen_here.count(u->start.sensor)) {
                    problems.push_back(fmt::format("timing '{}' ends before its start event", em.after));
                }
            }
            seen_here.insert(em.sensor);
        }
    }
    for (const auto& b : m.sensor_to_transition) {
        if (!emitted.count(b.sensor)) problems.push_back(fmt::format("sensor '{}' has no nominal behaviour", b.sensor));
    }
    for (const auto& step : m.order) {
        for (const auto& sig : step.signals) {
            if (!emitted.count(sig.sensor)) {
                problems.push_back(fmt::format("signal '{}' has no nominal behaviour", sig.sensor));
            }
        }
    }
    const auto& t = cfg.targets;
    for (const auto* s : {&t.feeder_position, &t.jack_position, &t.pressure, &t.tightness_probe}) {
        if (!cfg.expected.values.count(*s)) problems.push_back(fmt::format("fault target '{}' missing", *s));
    }
    if (!find_timing(m, t.jack_stroke)) problems.push_back(fmt::format("fault target '{}' missing", t.jack_stroke));
    return problems;
}

void check_fault(const MachineConfig& cfg, const FaultSpec& fault) {
    const auto name = fault_kind_name(fault.kind);
    if (fault.target_product && *fault.target_product < 1) {
        throw InvalidFault(fmt::format("{}: target product must be >= 1", name));
    }
    if (fault.magnitude && !std::isfinite(*fault.magnitude)) {
        throw InvalidFault(fmt::format("{}: magnitude must be finite", name));
    }
    const auto& t = cfg.targets;
    switch (fault.kind) {
    case FaultKind::None:
    case FaultKind::PartBroken:
        if (fault.magnitude) throw InvalidFault(fmt::format("{} takes no magnitude", name));
        break;
    case FaultKind::TimingJackCylinder: {
        const double extra = fault.magnitude.value_or(0.35);
        const auto& tol = cfg.expected.timing_windows.at(t.jack_stroke);
        if (!(extra > tol.tol_above) || !(extra < 0.9)) {
            throw InvalidFault(fmt::format("{}: delay {} must exceed the tolerance {} and stay below 0.9 s", name,
                                           extra, tol.tol_above));
        }
        break;
    }
    case FaultKind::PartWrongPosition: {
        const auto& ev = expected_of(cfg, t.feeder_position);
        const double pos = ev.nominal + fault.magnitude.value_or(0.4);
        if (fault.magnitude && *fault.magnitude == 0.0) {
            throw InvalidFault(fmt::format("{}: offset must be non-zero", name));
        }
        if (!ev.admissible().contains(pos)) {
            throw InvalidFault(fmt::format("{}: offset must stay within the feeder tolerance", name));
        }
        for (const auto& rule : cfg.process.causal_rules) {
            for (const auto& [id, d] : rule.discriminators) {
                if (d.sensor == t.feeder_position && d.lower <= pos && pos <= d.upper) {
                    throw InvalidFault(fmt::format("{}: offset must leave the discriminator interval", name));
                }
            }
        }
        break;
    }
    case FaultKind::PressureSensorBroken:
        if (fault.magnitude && *fault.magnitude < 0.0) {
            throw InvalidFault(fmt::format("{}: stuck value must be non-negative", name));
        }
        break;
    case FaultKind::JackCylinderBroken:
        if (expected_of(cfg, t.jack_position).admissible().contains(fault.magnitude.value_or(0.0))) {
            throw InvalidFault(fmt::format("{}: reported position must be out of range", name));
        }
        break;
    }
}

Verdict quality_verdict(const ProcessDescription& m, const ExpectedValueSet& e, std::span<const TraceEvent> events) {
    for (const auto station : quality_stations(m)) {
        StepFormula f{station, {}, {}};
        for (const auto& sensor : sensors_for_step(m, station)) {
            if (auto it = e.values.find(sensor); it != e.values.end()) {
                f.value_constraints.push_back({sensor, it->second.admissible()});
            }
        }
        std::vector<TraceEvent> own;
        for (const auto& ev : events) {
            if (station_of_sensor(m, ev.sensor) == station) own.push_back(ev);
        }
        if (!check_sat(f, own).sat()) return Verdict::not_ok(station);
    }
    return Verdict::good();
}

Trace simulate_product_run(const MachineConfig& cfg, const FaultSpec& fault, std::uint64_t seed, int product_id) {
    check_fault(cfg, fault);
    const auto plan = plan_product(cfg, fault, seed, product_id);
    Trace trace;
    trace.product_id = product_id;
    trace.events = place(cfg, plan, 0, to_grid(cfg.cycle_time));
    trace.verdict = plan.verdict;
    return trace;
}

std::pair<std::vector<Trace>, MachineLog> simulate_machine(const MachineConfig& cfg, int n_products,
                                                           const std::vector<FaultSpec>& faults,
                                                           std::uint64_t seed) {
    if (n_products < 1) throw InvalidFault("at least one product must be simulated");
    std::vector<FaultSpec> per_product(static_cast<std::size_t>(n_products));
    std::vector<bool> assigned(per_product.size(), false);
    for (std::size_t i = 0; i < faults.size(); ++i) {
        check_fault(cfg, faults[i]);
        const int target = faults[i].target_product.value_or(static_cast<int>(i) + 1);
        if (target > n_products) {
            throw InvalidFault(fmt::format("fault targets product {} of {}", target, n_products));
        }
        if (assigned[target - 1]) throw InvalidFault(fmt::format("product {} has two faults", target));
        assigned[target - 1] = true;
        per_product[target - 1] = faults[i];
    }

    const Ticks cycle = to_grid(cfg.cycle_time);
    const int stations = cfg.process.station_count();
    std::vector<ProductPlan> plans;
    std::vector<Trace> traces;
    for (int p = 1; p <= n_products; ++p) {
        plans.push_back(plan_product(cfg, per_product[p - 1], seed, p));
        traces.push_back({p, place(cfg, plans.back(), 0, cycle), plans.back().verdict});
    }

    MachineLog log;
    const int cycles = n_products + stations - 1;
    for (int c = 0; c < cycles; ++c) {
        const Ticks start = static_cast<Ticks>(c) * cycle;
        CycleRecord rec{c, to_seconds(start), std::vector<int>(static_cast<std::size_t>(stations), 0)};
        std::vector<std::pair<Ticks, TraceEvent>> events;
        for (int s = 1; s <= stations; ++s) {
            const int p = c - s + 2;
            if (p < 1 || p > n_products) continue;
            rec.occupancy[s - 1] = p;
            const Ticks base = start + station_stagger(StationIndex{s});
            for (const auto& ev : plans[p - 1].stations[s - 1]) {
                events.push_back({base + ev.offset, {to_seconds(base + ev.offset), ev.sensor, ev.value}});
            }
        }
        std::stable_sort(events.begin(), events.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        log.records.emplace_back(std::move(rec));
        for (auto& [ticks, ev] : events) log.records.emplace_back(std::move(ev));
    }
    return {std::move(traces), std::move(log)};
}

std::vector<Trace> demux_log(const MachineLog& log, const MachineConfig& cfg) {
    const auto& m = cfg.process;
    std::map<int, Ticks> entry;
    std::map<int, std::vector<TraceEvent>> events;
    const CycleRecord* current = nullptr;
    Ticks last_time = std::numeric_limits<Ticks>::min();

    for (const auto& rec : log.records) {
        if (const auto* c = std::get_if<CycleRecord>(&rec)) {
            if (static_cast<int>(c->occupancy.size()) != m.station_count()) {
                throw MalformedLog(fmt::format("cycle {} lists {} nests for {} stations", c->cycle,
                                               c->occupancy.size(), m.station_count()));
            }
            current = c;
            const int loaded = c->occupancy.front();
            if (loaded > 0) entry.try_emplace(loaded, to_ticks(c->time));
            continue;
        }
        const auto& ev = std::get<TraceEvent>(rec);
        const auto station = station_of_sensor(m, ev.sensor);
        if (!station) throw MalformedLog(fmt::format("unknown sensor '{}' in log", ev.sensor));
        const Ticks t = to_ticks(ev.time);
        if (t < last_time) throw MalformedLog(fmt::format("log goes back in time at {}", ev.time));
        last_time = t;
        const int product = current ? current->occupancy[station->value - 1] : 0;
        if (product <= 0 || !entry.count(product)) {
            throw MalformedLog(fmt::format("event '{}' at {} belongs to no product", ev.sensor, ev.time));
        }
        events[product].push_back({to_seconds(t - entry.at(product)), ev.sensor, ev.value});
    }

    std::vector<Trace> traces;
    for (auto& [product, evs] : events) {
        Trace tr;
        tr.product_id = product;
        tr.events = std::move(evs);
        tr.verdict = quality_verdict(m, cfg.expected, tr.events);
        traces.push_back(std::move(tr));
    }
    return traces;
}

std::string render_log_line(const TraceEvent& ev, std::time_t wall_clock, const SensorLabel& label) {
    std::tm tm{};
    gmtime_r(&wall_clock, &tm);
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%a %b %e %H:%M:%S %Y", &tm);
    const auto value = fmt::format("{:.{}f}", ev.value, label.decimals);
    if (label.phrase.empty()) return fmt::format("{}   {} {}", stamp, label.label, value);
    return fmt::format("{}   {} {} {}", stamp, label.label, label.phrase, value);
}

std::string render_log_line(const TraceEvent& ev, std::time_t wall_clock, const ProcessDescription& m) {
    const auto* label = label_of_sensor(m, ev.sensor);
    return render_log_line(ev, wall_clock, label ? *label : SensorLabel{ev.sensor, "value", 3});
}

std::string render_machine_log(const MachineLog& log, const ProcessDescription& m, std::time_t start) {
    std::string out;
    for (const auto& rec : log.records) {
        if (const auto* ev = std::get_if<TraceEvent>(&rec)) {
            out += render_log_line(*ev, start + static_cast<std::time_t>(std::floor(ev->time)), m);
            out += '\n';
        }
    }
    return out;
}

} // namespace rimdiag
