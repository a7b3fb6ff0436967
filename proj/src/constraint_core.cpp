#include "rimdiag/constraint_core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rimdiag/errors.hpp"

namespace rimdiag {

using nlohmann::json;

namespace {

double tolerance_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw SchemaError(fmt::format("{}: '{}' must be a number", where, key));
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw SchemaError(fmt::format("{}: '{}' must be finite", where, key));
    return v;
}

void only_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
            throw SchemaError(fmt::format("{}: unknown key '{}'", where, it.key()));
        }
    }
}

// Event selected by a role: first or last report of the sensor in time order.
const TraceEvent* select_event(std::span<const TraceEvent> events, const EventRole& role) {
    const TraceEvent* chosen = nullptr;
    for (const auto& ev : events) {
        if (ev.sensor != role.sensor) continue;
        if (!chosen) {
            chosen = &ev;
        } else if (role.occurrence == Occurrence::First ? ev.time < chosen->time : ev.time >= chosen->time) {
            chosen = &ev;
        }
    }
    return chosen;
}

bool candidate_tool_consistent(const ExpectedValueSet& e, const ProcessDescription& m, StationIndex step,
                               std::span<const TraceEvent> events, const ToolId& tool) {
    StepFormula f{step, {}, {}};
    for (const auto& w : m.sensor_to_tool) {
        if (w.tool != tool || station_of_sensor(m, w.sensor) != step) continue;
        if (auto it = e.values.find(w.sensor); it != e.values.end()) {
            f.value_constraints.push_back({w.sensor, it->second.admissible()});
        }
    }
    return check_sat(f, events).sat();
}

} // namespace

ExpectedValueSet load_expected_values(const json& doc, const ProcessDescription& m) {
    const json* section = &doc;
    if (doc.contains("schema_version")) {
        auto it = doc.find("expected_values");
        if (it == doc.end()) throw SchemaError("document: missing key 'expected_values'");
        section = &*it;
    }
    only_keys(*section, {"sensors", "timings"}, "expected_values");

    ExpectedValueSet e;
    const json empty = json::object();
    const json& sensors = section->contains("sensors") ? section->at("sensors") : empty;
    const json& timings = section->contains("timings") ? section->at("timings") : empty;
    if (!sensors.is_object() || !timings.is_object()) {
        throw SchemaError("expected_values: 'sensors' and 'timings' must be objects");
    }

    for (auto it = sensors.begin(); it != sensors.end(); ++it) {
        const auto where = "expected value " + it.key();
        only_keys(*it, {"nominal", "tol_below", "tol_above"}, where);
        ExpectedValue ev{it.key(), tolerance_field(*it, "nominal", where),
                         tolerance_field(*it, "tol_below", where), tolerance_field(*it, "tol_above", where)};
        if (ev.tol_below < 0.0 || ev.tol_above < 0.0) {
            throw SchemaError(where + ": tolerances must be non-negative");
        }
        bool in_v = std::any_of(m.sensor_to_transition.begin(), m.sensor_to_transition.end(),
                                [&](const SensorBinding& b) { return b.sensor == ev.sensor; });
        if (!in_v) throw ReferenceError(where + ": sensor is not mapped onto any transition");
        e.values.emplace(ev.sensor, std::move(ev));
    }

    for (auto it = timings.begin(); it != timings.end(); ++it) {
        const auto where = "timing window " + it.key();
        only_keys(*it, {"tol_below", "tol_above"}, where);
        const auto* u = find_timing(m, it.key());
        if (!u) throw ReferenceError(where + ": unknown timing");
        TimingTolerance w{u->nominal, tolerance_field(*it, "tol_below", where),
                          tolerance_field(*it, "tol_above", where)};
        if (w.tol_below < 0.0 || w.tol_above < 0.0) {
            throw SchemaError(where + ": tolerances must be non-negative");
        }
        e.timing_windows.emplace(it.key(), w);
    }
    for (const auto& u : m.timings) {
        if (!e.timing_windows.count(u.id)) {
            throw SchemaError(fmt::format("expected_values: no window for timing '{}'", u.id));
        }
    }
    return e;
}

StepFormula build_step_formula(const ExpectedValueSet& e, const ProcessDescription& m, StationIndex step) {
    StepFormula f;
    f.step = step;
    for (const auto& sensor : sensors_for_step(m, step)) {  // throws UnknownStep
        if (auto it = e.values.find(sensor); it != e.values.end()) {
            f.value_constraints.push_back({sensor, it->second.admissible()});
        }
    }
    for (const auto* u : timings_for_step(m, step)) {
        auto it = e.timing_windows.find(u->id);
        const Interval window = it != e.timing_windows.end() ? it->second.admissible()
                                                             : Interval{u->nominal, u->nominal};
        f.timing_constraints.push_back({u->id, window, u->start, u->end});
    }
    return f;
}

SatResult check_sat(const StepFormula& f, std::span<const TraceEvent> events) {
    SatResult r;
    for (const auto& c : f.value_constraints) {
        const TraceEvent* latest = nullptr;
        bool satisfied = false;
        for (const auto& ev : events) {
            if (ev.sensor != c.sensor) continue;
            satisfied = satisfied || c.bounds.contains(ev.value);
            if (!latest || ev.time >= latest->time) latest = &ev;
        }
        if (!satisfied) {
            r.violations.push_back({ViolationKind::Value, c.sensor,
                                    latest ? std::optional<double>(latest->value) : std::nullopt, c.bounds});
        }
    }
    for (const auto& c : f.timing_constraints) {
        const auto* start = select_event(events, c.start);
        const auto* end = select_event(events, c.end);
        if (!start || !end) {
            r.violations.push_back({ViolationKind::Timing, c.id, std::nullopt, c.window});
            continue;
        }
        const double duration = end->time - start->time;
        if (!c.window.contains(duration)) {
            r.violations.push_back({ViolationKind::Timing, c.id, duration, c.window});
        }
    }
    r.status = r.violations.empty() ? SatStatus::Sat : SatStatus::Unsat;
    return r;
}

std::vector<std::string> extract_conflict_names(const SatResult& r) {
    if (r.sat()) throw NotUnsat("conflict names requested for a satisfiable result");
    std::vector<std::string> values;
    std::vector<std::string> timings;
    for (const auto& v : r.violations) {
        (v.kind == ViolationKind::Value ? values : timings).push_back(v.subject);
    }
    for (auto* group : {&values, &timings}) {
        std::sort(group->begin(), group->end());
        group->erase(std::unique(group->begin(), group->end()), group->end());
    }
    values.insert(values.end(), timings.begin(), timings.end());
    return values;
}

MemoryResolution check_sat_with_memory(const ExpectedValueSet& e, const ProcessDescription& m,
                                       StationIndex step, std::span<const TraceEvent> events,
                                       ExplanationMemory& z) {
    for (auto entry = z.entries.begin(); entry != z.entries.end(); ++entry) {
        if (!(step < entry->origin)) continue;  // evidence only flows from earlier steps

        std::vector<const CandidateCause*> fired;
        for (const auto& c : entry->candidates) {
            auto d = entry->discriminators.find(c.id);
            if (d == entry->discriminators.end()) continue;
            if (station_of_sensor(m, d->second.sensor) != step) continue;
            bool seen = false;
            bool inside = false;
            for (const auto& ev : events) {
                if (ev.sensor != d->second.sensor) continue;
                seen = true;
                inside = inside || (d->second.lower <= ev.value && ev.value <= d->second.upper);
            }
            if (seen && !inside) fired.push_back(&c);
        }
        if (fired.size() != 1) continue;

        bool rivals_consistent = true;
        for (const auto& c : entry->candidates) {
            if (&c == fired.front() || c.kind != CauseKind::ToolFault) continue;
            rivals_consistent = rivals_consistent && candidate_tool_consistent(e, m, step, events, c.tool);
        }
        if (!rivals_consistent) continue;

        MemoryResolution res;
        res.status = MemoryResolution::Status::Confirmed;
        res.confirmed = *fired.front();
        res.entry = std::move(*entry);
        z.entries.erase(entry);
        return res;
    }
    return {};
}

} // namespace rimdiag
