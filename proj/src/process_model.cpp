#include "rimdiag/process_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "rimdiag/errors.hpp"

namespace rimdiag {

using nlohmann::json;

namespace {

// --- schema helpers -------------------------------------------------------

void expect_keys(const json& obj, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional, std::string_view where) {
    if (!obj.is_object()) {
        throw SchemaError(fmt::format("{}: expected an object", where));
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& key = it.key();
        bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                     std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) {
            throw SchemaError(fmt::format("{}: unknown key '{}'", where, key));
        }
    }
    for (auto key : required) {
        if (!obj.contains(key)) {
            throw SchemaError(fmt::format("{}: missing key '{}'", where, key));
        }
    }
}

const json& member(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(fmt::format("{}: missing key '{}'", where, key));
    }
    return *it;
}

int get_int(const json& obj, std::string_view key, std::string_view where) {
    const auto& v = member(obj, key, where);
    if (!v.is_number_integer()) {
        throw SchemaError(fmt::format("{}: '{}' must be an integer", where, key));
    }
    return v.get<int>();
}

double get_number(const json& obj, std::string_view key, std::string_view where) {
    const auto& v = member(obj, key, where);
    if (!v.is_number()) {
        throw SchemaError(fmt::format("{}: '{}' must be a number", where, key));
    }
    return v.get<double>();
}

std::string get_string(const json& obj, std::string_view key, std::string_view where) {
    const auto& v = member(obj, key, where);
    if (!v.is_string()) {
        throw SchemaError(fmt::format("{}: '{}' must be a string", where, key));
    }
    return v.get<std::string>();
}

const json& get_array(const json& obj, std::string_view key, std::string_view where) {
    const auto& v = member(obj, key, where);
    if (!v.is_array()) {
        throw SchemaError(fmt::format("{}: '{}' must be an array", where, key));
    }
    return v;
}

// --- enum spellings -------------------------------------------------------

constexpr std::pair<StationRole, std::string_view> kRoles[] = {
    {StationRole::Input, "input"},        {StationRole::Process, "process"},
    {StationRole::Feed, "feed"},          {StationRole::QualityControl, "qc"},
    {StationRole::EjectOk, "eject_ok"},   {StationRole::EjectNotOk, "eject_nok"},
};

constexpr std::pair<Deviation, std::string_view> kDeviations[] = {
    {Deviation::Below, "below"},
    {Deviation::Above, "above"},
    {Deviation::Missing, "missing"},
    {Deviation::Any, "any"},
};

template <typename E, std::size_t N>
E parse_enum(const std::pair<E, std::string_view> (&table)[N], const std::string& text,
             std::string_view where) {
    for (const auto& [value, name] : table) {
        if (name == text) return value;
    }
    throw SchemaError(fmt::format("{}: unknown value '{}'", where, text));
}

template <typename E, std::size_t N>
std::string_view enum_name(const std::pair<E, std::string_view> (&table)[N], E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

Occurrence parse_occurrence(const std::string& text, std::string_view where) {
    if (text == "first") return Occurrence::First;
    if (text == "last") return Occurrence::Last;
    throw SchemaError(fmt::format("{}: occurrence must be 'first' or 'last'", where));
}

std::string_view occurrence_name(Occurrence o) { return o == Occurrence::First ? "first" : "last"; }

SensorLabel parse_label(const json& obj, const SensorId& sensor, std::string_view where) {
    SensorLabel label;
    label.label = obj.contains("label") ? get_string(obj, "label", where) : sensor;
    label.phrase = obj.contains("phrase") ? get_string(obj, "phrase", where) : "value";
    label.decimals = obj.contains("decimals") ? get_int(obj, "decimals", where) : 0;
    if (label.decimals < 0 || label.decimals > 9) {
        throw SchemaError(fmt::format("{}: decimals must be within 0..9", where));
    }
    return label;
}

json label_json(const SensorId& sensor, const SensorLabel& label) {
    return {{"sensor", sensor},
            {"label", label.label},
            {"phrase", label.phrase},
            {"decimals", label.decimals}};
}

EventRole parse_role(const json& obj, std::string_view where) {
    expect_keys(obj, {"sensor", "occurrence"}, {}, where);
    return {get_string(obj, "sensor", where),
            parse_occurrence(get_string(obj, "occurrence", where), where)};
}

json role_json(const EventRole& role) {
    return {{"sensor", role.sensor}, {"occurrence", occurrence_name(role.occurrence)}};
}

bool is_reference_issue(IssueKind kind) {
    switch (kind) {
    case IssueKind::UnknownTransition:
    case IssueKind::ToolWithoutTransition:
    case IssueKind::UnknownTimingTarget:
    case IssueKind::TimingRoleOutsideStep:
    case IssueKind::RuleUnknownSensor:
    case IssueKind::RuleUnknownTool:
    case IssueKind::RuleUnknownCandidate:
        return true;
    default:
        return false;
    }
}

const SensorBinding* find_binding(const ProcessDescription& m, const SensorId& sensor) {
    for (const auto& b : m.sensor_to_transition) {
        if (b.sensor == sensor) return &b;
    }
    return nullptr;
}

} // namespace

std::size_t ProcessDescription::transition_count() const {
    std::size_t n = 0;
    for (const auto& step : order) n += step.transitions.size();
    return n;
}

std::string_view issue_name(IssueKind kind) {
    switch (kind) {
    case IssueKind::StationOrder: return "StationOrder";
    case IssueKind::StationRole: return "StationRole";
    case IssueKind::StateOutOfRange: return "StateOutOfRange";
    case IssueKind::SilentTransition: return "SilentTransition";
    case IssueKind::EmptyProcessingStation: return "EmptyProcessingStation";
    case IssueKind::DuplicateTransition: return "DuplicateTransition";
    case IssueKind::DuplicateSensor: return "DuplicateSensor";
    case IssueKind::DuplicateToolBinding: return "DuplicateToolBinding";
    case IssueKind::UnknownTransition: return "UnknownTransition";
    case IssueKind::ToolWithoutTransition: return "ToolWithoutTransition";
    case IssueKind::TimingArity: return "TimingArity";
    case IssueKind::DuplicateTiming: return "DuplicateTiming";
    case IssueKind::MissingTiming: return "MissingTiming";
    case IssueKind::UnknownTimingTarget: return "UnknownTimingTarget";
    case IssueKind::TimingRoleOutsideStep: return "TimingRoleOutsideStep";
    case IssueKind::RotationNotAdjacent: return "RotationNotAdjacent";
    case IssueKind::RuleUnknownSensor: return "RuleUnknownSensor";
    case IssueKind::RuleNoCandidates: return "RuleNoCandidates";
    case IssueKind::RuleUnknownTool: return "RuleUnknownTool";
    case IssueKind::RuleUnknownCandidate: return "RuleUnknownCandidate";
    case IssueKind::DiscriminatorNotEarlier: return "DiscriminatorNotEarlier";
    }
    return "?";
}

// --- loading ----------------------------------------------------------------

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot open '{}'", path.string()));
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

ProcessDescription load_process_description_file(const std::filesystem::path& path) {
    return load_process_description(read_json_file(path));
}

ProcessDescription load_process_description(const json& doc) {
    expect_keys(doc,
                {"schema_version", "stations", "transitions", "timings", "sensor_to_transition",
                 "sensor_to_tool", "causal_rules", "expected_values"},
                {}, "document");

    ProcessDescription m;
    m.schema_version = get_int(doc, "schema_version", "document");
    if (m.schema_version != 1) {
        throw SchemaError(fmt::format("unsupported schema_version {}", m.schema_version));
    }
    if (!doc.at("expected_values").is_object()) {
        throw SchemaError("document: 'expected_values' must be an object");
    }

    // O: stations must form a permutation of 1..n.
    const auto& stations = get_array(doc, "stations", "document");
    for (const auto& st : stations) {
        expect_keys(st, {"index", "role"}, {"name", "signals"}, "station");
        ProductionStep step;
        step.index = StationIndex{get_int(st, "index", "station")};
        const auto where = fmt::format("station {}", step.index.value);
        step.role = parse_enum(kRoles, get_string(st, "role", where), where);
        step.name = st.contains("name") ? get_string(st, "name", where) : std::string{};
        if (st.contains("signals")) {
            for (const auto& sig : get_array(st, "signals", where)) {
                expect_keys(sig, {"sensor"}, {"label", "phrase", "decimals"}, where);
                auto sensor = get_string(sig, "sensor", where);
                step.signals.push_back({sensor, parse_label(sig, sensor, where)});
            }
        }
        m.order.push_back(std::move(step));
    }
    std::sort(m.order.begin(), m.order.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < m.order.size(); ++i) {
        if (m.order[i].index.value != static_cast<int>(i) + 1) {
            std::vector<int> seen;
            for (const auto& s : m.order) seen.push_back(s.index.value);
            throw OrderError(fmt::format("station indices {} are not a permutation of 1..{}",
                                         fmt::join(seen, ","), m.order.size()));
        }
    }
    if (m.order.empty()) {
        throw OrderError("no stations declared");
    }

    const auto& trans = member(doc, "transitions", "document");
    expect_keys(trans, {"state_count", "items"}, {}, "transitions");
    m.state_count = get_int(trans, "state_count", "transitions");
    for (const auto& t : get_array(trans, "items", "transitions")) {
        expect_keys(t, {"id", "from", "to", "station"}, {"name", "check"}, "transition");
        StateTransition tr;
        tr.id = get_int(t, "id", "transition");
        const auto where = fmt::format("transition {}", tr.id);
        tr.from_state = ProductState{get_int(t, "from", where)};
        tr.to_state = ProductState{get_int(t, "to", where)};
        tr.station = StationIndex{get_int(t, "station", where)};
        tr.name = t.contains("name") ? get_string(t, "name", where) : std::string{};
        if (t.contains("check")) {
            if (!t.at("check").is_boolean()) throw SchemaError(where + ": 'check' must be a boolean");
            tr.check = t.at("check").get<bool>();
        }
        if (tr.station.value < 1 || tr.station.value > m.station_count()) {
            throw ReferenceError(fmt::format("{} refers to unknown station {}", where, tr.station.value));
        }
        m.order[tr.station.value - 1].transitions.push_back(std::move(tr));
    }

    for (const auto& u : get_array(doc, "timings", "document")) {
        Timing timing;
        const auto kind = get_string(u, "kind", "timing");
        if (kind == "transition") {
            expect_keys(u, {"id", "kind", "transition", "nominal", "start", "end"}, {}, "timing");
            timing.kind = TimingKind::Transition;
            timing.ref = get_int(u, "transition", "timing");
        } else if (kind == "rotation") {
            expect_keys(u, {"id", "kind", "rotation", "from", "to", "nominal", "start", "end"}, {}, "timing");
            timing.kind = TimingKind::Rotation;
            timing.ref = get_int(u, "rotation", "timing");
        } else {
            throw SchemaError(fmt::format("timing: unknown kind '{}'", kind));
        }
        timing.id = get_string(u, "id", "timing");
        const auto where = "timing " + timing.id;
        timing.nominal = get_number(u, "nominal", where);
        if (!(timing.nominal >= 0.0)) throw SchemaError(where + ": nominal must be non-negative");
        timing.start = parse_role(u.at("start"), where);
        timing.end = parse_role(u.at("end"), where);
        if (timing.kind == TimingKind::Rotation) {
            m.rotations.push_back({timing.ref, StationIndex{get_int(u, "from", where)},
                                   StationIndex{get_int(u, "to", where)}, timing.nominal});
        }
        m.timings.push_back(std::move(timing));
    }

    for (const auto& v : get_array(doc, "sensor_to_transition", "document")) {
        expect_keys(v, {"sensor", "transition"}, {"label", "phrase", "decimals"}, "sensor_to_transition");
        SensorBinding b;
        b.sensor = get_string(v, "sensor", "sensor_to_transition");
        b.transition = get_int(v, "transition", b.sensor);
        b.label = parse_label(v, b.sensor, b.sensor);
        m.sensor_to_transition.push_back(std::move(b));
    }

    for (const auto& w : get_array(doc, "sensor_to_tool", "document")) {
        expect_keys(w, {"sensor", "tool"}, {}, "sensor_to_tool");
        m.sensor_to_tool.push_back({get_string(w, "sensor", "sensor_to_tool"),
                                    get_string(w, "tool", "sensor_to_tool")});
    }

    for (const auto& r : get_array(doc, "causal_rules", "document")) {
        expect_keys(r, {"trigger", "candidates"}, {"discriminators"}, "causal_rule");
        CausalRule rule;
        const auto& trig = r.at("trigger");
        expect_keys(trig, {"sensor", "direction"}, {}, "causal_rule.trigger");
        rule.trigger_sensor = get_string(trig, "sensor", "causal_rule.trigger");
        rule.direction = parse_enum(kDeviations, get_string(trig, "direction", "causal_rule.trigger"),
                                    "causal_rule.trigger");
        const auto where = "causal rule on " + rule.trigger_sensor;
        for (const auto& c : get_array(r, "candidates", where)) {
            expect_keys(c, {"id", "step"}, {"tool", "description"}, where);
            CandidateCause cause;
            cause.id = get_string(c, "id", where);
            cause.step = StationIndex{get_int(c, "step", where)};
            if (c.contains("tool") == c.contains("description")) {
                throw SchemaError(fmt::format("{}: candidate '{}' needs exactly one of 'tool' or 'description'",
                                              where, cause.id));
            }
            if (c.contains("tool")) {
                cause.kind = CauseKind::ToolFault;
                cause.tool = get_string(c, "tool", where);
            } else {
                cause.kind = CauseKind::UpstreamProductFault;
                cause.description = get_string(c, "description", where);
            }
            rule.candidates.push_back(std::move(cause));
        }
        if (r.contains("discriminators")) {
            const auto& ds = r.at("discriminators");
            if (!ds.is_object()) throw SchemaError(where + ": discriminators must be an object");
            for (auto it = ds.begin(); it != ds.end(); ++it) {
                expect_keys(*it, {"sensor", "lower", "upper"}, {}, where);
                Discriminator d{get_string(*it, "sensor", where), get_number(*it, "lower", where),
                                get_number(*it, "upper", where)};
                if (d.lower > d.upper) throw SchemaError(where + ": empty discriminator interval");
                rule.discriminators.emplace(it.key(), std::move(d));
            }
        }
        m.causal_rules.push_back(std::move(rule));
    }

    auto issues = validate(m);
    if (!issues.empty()) {
        std::string text;
        for (const auto& issue : issues) {
            text += fmt::format("{}({}): {}\n", issue_name(issue.kind), issue.subject, issue.message);
        }
        const auto kind = issues.front().kind;
        if (kind == IssueKind::StationOrder) throw OrderError(text);
        if (is_reference_issue(kind)) throw ReferenceError(text);
        throw SchemaError(text);
    }
    return m;
}

json serialize(const ProcessDescription& m) {
    json stations = json::array();
    json items = json::array();
    for (const auto& step : m.order) {
        json st = {{"index", step.index.value},
                   {"role", enum_name(kRoles, step.role)},
                   {"name", step.name}};
        json sigs = json::array();
        for (const auto& sig : step.signals) sigs.push_back(label_json(sig.sensor, sig.label));
        st["signals"] = std::move(sigs);
        stations.push_back(std::move(st));
        for (const auto& t : step.transitions) {
            items.push_back({{"id", t.id},
                             {"from", t.from_state.value},
                             {"to", t.to_state.value},
                             {"station", t.station.value},
                             {"name", t.name},
                             {"check", t.check}});
        }
    }

    json timings = json::array();
    for (const auto& u : m.timings) {
        json entry = {{"id", u.id}, {"nominal", u.nominal}, {"start", role_json(u.start)},
                      {"end", role_json(u.end)}};
        if (u.kind == TimingKind::Transition) {
            entry["kind"] = "transition";
            entry["transition"] = u.ref;
        } else {
            entry["kind"] = "rotation";
            entry["rotation"] = u.ref;
            const auto* rot = find_rotation(m, u.ref);
            entry["from"] = rot ? rot->from_position.value : 0;
            entry["to"] = rot ? rot->to_position.value : 0;
        }
        timings.push_back(std::move(entry));
    }

    json v = json::array();
    for (const auto& b : m.sensor_to_transition) {
        auto entry = label_json(b.sensor, b.label);
        entry["transition"] = b.transition;
        v.push_back(std::move(entry));
    }
    json w = json::array();
    for (const auto& b : m.sensor_to_tool) w.push_back({{"sensor", b.sensor}, {"tool", b.tool}});

    json rules = json::array();
    for (const auto& rule : m.causal_rules) {
        json cands = json::array();
        for (const auto& c : rule.candidates) {
            json entry = {{"id", c.id}, {"step", c.step.value}};
            if (c.kind == CauseKind::ToolFault) {
                entry["tool"] = c.tool;
            } else {
                entry["description"] = c.description;
            }
            cands.push_back(std::move(entry));
        }
        json discs = json::object();
        for (const auto& [id, d] : rule.discriminators) {
            discs[id] = {{"sensor", d.sensor}, {"lower", d.lower}, {"upper", d.upper}};
        }
        rules.push_back({{"trigger",
                          {{"sensor", rule.trigger_sensor},
                           {"direction", enum_name(kDeviations, rule.direction)}}},
                         {"candidates", std::move(cands)},
                         {"discriminators", std::move(discs)}});
    }

    return {{"schema_version", m.schema_version},
            {"stations", std::move(stations)},
            {"transitions", {{"state_count", m.state_count}, {"items", std::move(items)}}},
            {"timings", std::move(timings)},
            {"sensor_to_transition", std::move(v)},
            {"sensor_to_tool", std::move(w)},
            {"causal_rules", std::move(rules)},
            {"expected_values", json::object()}};
}

// --- validation -------------------------------------------------------------

std::vector<ValidationIssue> validate(const ProcessDescription& m) {
    std::vector<ValidationIssue> issues;
    auto add = [&](IssueKind kind, std::string subject, std::string message) {
        issues.push_back({kind, std::move(subject), std::move(message)});
    };
    const int n = m.station_count();

    if (n == 0) add(IssueKind::StationOrder, "stations", "no stations declared");
    for (int i = 0; i < n; ++i) {
        if (m.order[i].index.value != i + 1) {
            add(IssueKind::StationOrder, fmt::format("station {}", m.order[i].index.value),
                fmt::format("position {} holds station {}", i + 1, m.order[i].index.value));
        }
    }

    int eject_ok = 0;
    int eject_nok = 0;
    std::set<int> transition_ids;
    std::set<SensorId> all_sensors;
    for (const auto& step : m.order) {
        eject_ok += step.role == StationRole::EjectOk;
        eject_nok += step.role == StationRole::EjectNotOk;
        const bool eject = step.role == StationRole::EjectOk || step.role == StationRole::EjectNotOk;
        if (step.transitions.empty() && !eject) {
            add(IssueKind::EmptyProcessingStation, fmt::format("station {}", step.index.value),
                "only eject stations may have no transitions");
        }
        for (const auto& t : step.transitions) {
            const auto subject = fmt::format("transition {}", t.id);
            if (!transition_ids.insert(t.id).second) {
                add(IssueKind::DuplicateTransition, subject, "transition id declared twice");
            }
            if (t.station != step.index) {
                add(IssueKind::StationOrder, subject,
                    fmt::format("listed under station {} but declares station {}", step.index.value,
                                t.station.value));
            }
            for (auto s : {t.from_state, t.to_state}) {
                if (s.value < 1 || s.value > m.state_count) {
                    add(IssueKind::StateOutOfRange, subject,
                        fmt::format("state {} outside 1..{}", s.value, m.state_count));
                }
            }
            if (t.from_state == t.to_state && !t.check) {
                add(IssueKind::SilentTransition, subject, "state unchanged but not declared a check");
            }
        }
        for (const auto& sig : step.signals) {
            if (!all_sensors.insert(sig.sensor).second) {
                add(IssueKind::DuplicateSensor, sig.sensor, "signal name declared twice");
            }
        }
    }
    if (eject_ok > 1) add(IssueKind::StationRole, "eject_ok", "more than one OK eject station");
    if (eject_nok > 1) add(IssueKind::StationRole, "eject_nok", "more than one Not-OK eject station");

    // V
    std::set<SensorId> v_sensors;
    for (const auto& b : m.sensor_to_transition) {
        if (!v_sensors.insert(b.sensor).second || all_sensors.count(b.sensor)) {
            add(IssueKind::DuplicateSensor, b.sensor, "sensor mapped more than once");
        }
        all_sensors.insert(b.sensor);
        if (!find_transition(m, b.transition)) {
            add(IssueKind::UnknownTransition, b.sensor,
                fmt::format("mapped onto unknown transition {}", b.transition));
        }
    }

    // W ⊆ dom(V)
    std::set<SensorId> w_sensors;
    for (const auto& b : m.sensor_to_tool) {
        if (!w_sensors.insert(b.sensor).second) {
            add(IssueKind::DuplicateToolBinding, b.sensor, "sensor mapped onto more than one tool");
        }
        if (!v_sensors.count(b.sensor)) {
            add(IssueKind::ToolWithoutTransition, b.sensor, "mapped onto a tool but not onto any transition");
        }
    }

    // U
    const auto expected_timings = m.transition_count() + m.rotations.size();
    if (m.timings.size() != expected_timings) {
        add(IssueKind::TimingArity, "timings",
            fmt::format("expected {} timings, found {}", expected_timings, m.timings.size()));
    }
    std::set<TimingId> timing_ids;
    std::map<int, int> per_transition;
    std::map<int, int> per_rotation;
    for (const auto& u : m.timings) {
        if (!timing_ids.insert(u.id).second) {
            add(IssueKind::DuplicateTiming, u.id, "timing id declared twice");
        }
        if (u.kind == TimingKind::Transition) {
            ++per_transition[u.ref];
            if (!find_transition(m, u.ref)) {
                add(IssueKind::UnknownTimingTarget, u.id, fmt::format("unknown transition {}", u.ref));
                continue;
            }
        } else {
            ++per_rotation[u.ref];
            if (!find_rotation(m, u.ref)) {
                add(IssueKind::UnknownTimingTarget, u.id, fmt::format("unknown rotation {}", u.ref));
                continue;
            }
        }
        const auto station = station_of_timing(m, u);
        for (const auto* role : {&u.start, &u.end}) {
            if (!station || station_of_sensor(m, role->sensor) != station) {
                add(IssueKind::TimingRoleOutsideStep, u.id,
                    fmt::format("event role sensor '{}' is not owned by the timing's station", role->sensor));
            }
        }
    }
    for (const auto& step : m.order) {
        for (const auto& t : step.transitions) {
            if (per_transition[t.id] != 1) {
                add(IssueKind::MissingTiming, fmt::format("transition {}", t.id),
                    fmt::format("needs exactly one timing, has {}", per_transition[t.id]));
            }
        }
    }

    // Rotations: each station has exactly one outbound rotation to its successor.
    std::map<int, int> outbound;
    std::set<int> rotation_ids;
    for (const auto& r : m.rotations) {
        const auto subject = fmt::format("rotation {}", r.id);
        if (!rotation_ids.insert(r.id).second) {
            add(IssueKind::DuplicateTiming, subject, "rotation id declared twice");
        }
        if (per_rotation[r.id] != 1) {
            add(IssueKind::MissingTiming, subject, "needs exactly one timing");
        }
        ++outbound[r.from_position.value];
        const int expected_to = n > 0 ? r.from_position.value % n + 1 : 0;
        if (r.from_position.value < 1 || r.from_position.value > n || r.to_position.value != expected_to) {
            add(IssueKind::RotationNotAdjacent, subject,
                fmt::format("moves {} -> {}, expected the next station", r.from_position.value,
                            r.to_position.value));
        }
    }
    for (int s = 1; s <= n; ++s) {
        if (outbound[s] != 1) {
            add(IssueKind::RotationNotAdjacent, fmt::format("station {}", s),
                fmt::format("needs exactly one outbound rotation, has {}", outbound[s]));
        }
    }

    // Causal rules.
    std::set<ToolId> tools;
    for (const auto& b : m.sensor_to_tool) tools.insert(b.tool);
    for (const auto& rule : m.causal_rules) {
        const auto subject = "rule:" + rule.trigger_sensor;
        const auto trigger_station = station_of_sensor(m, rule.trigger_sensor);
        if (!v_sensors.count(rule.trigger_sensor)) {
            add(IssueKind::RuleUnknownSensor, subject, "trigger sensor not in V");
        }
        if (rule.candidates.empty()) {
            add(IssueKind::RuleNoCandidates, subject, "rule lists no candidate causes");
        }
        std::set<std::string> ids;
        for (const auto& c : rule.candidates) {
            ids.insert(c.id);
            if (c.kind == CauseKind::ToolFault && !tools.count(c.tool)) {
                add(IssueKind::RuleUnknownTool, subject, fmt::format("candidate tool '{}' not in W", c.tool));
            }
            if (c.step.value < 1 || c.step.value > n) {
                add(IssueKind::RuleUnknownCandidate, subject,
                    fmt::format("candidate '{}' names unknown step {}", c.id, c.step.value));
            }
        }
        for (const auto& [id, d] : rule.discriminators) {
            if (!ids.count(id)) {
                add(IssueKind::RuleUnknownCandidate, subject, fmt::format("discriminator for unknown candidate '{}'", id));
            }
            if (!v_sensors.count(d.sensor)) {
                add(IssueKind::RuleUnknownSensor, subject, fmt::format("discriminator sensor '{}' not in V", d.sensor));
                continue;
            }
            const auto disc_station = station_of_sensor(m, d.sensor);
            if (trigger_station && disc_station && !(*disc_station < *trigger_station)) {
                add(IssueKind::DiscriminatorNotEarlier, subject,
                    fmt::format("discriminator sensor '{}' is not at an earlier step", d.sensor));
            }
        }
    }
    return issues;
}

// --- lookups ----------------------------------------------------------------

const ProductionStep& step_at(const ProcessDescription& m, StationIndex step) {
    if (step.value < 1 || step.value > m.station_count()) {
        throw UnknownStep(fmt::format("unknown step {}", step.value));
    }
    return m.order[step.value - 1];
}

StationIndex next_station(const ProcessDescription& m, StationIndex step) {
    for (const auto& r : m.rotations) {
        if (r.from_position == step) return r.to_position;
    }
    throw UnknownStep(fmt::format("no rotation leaves step {}", step.value));
}

std::vector<SensorId> sensors_for_step(const ProcessDescription& m, StationIndex step) {
    const auto& s = step_at(m, step);
    std::vector<SensorId> out;
    for (const auto& b : m.sensor_to_transition) {
        for (const auto& t : s.transitions) {
            if (t.id == b.transition) {
                out.push_back(b.sensor);
                break;
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<ToolId> tool_for_sensor(const ProcessDescription& m, const SensorId& sensor) {
    if (!find_binding(m, sensor)) {
        throw UnknownSensor(fmt::format("unknown sensor '{}'", sensor));
    }
    for (const auto& b : m.sensor_to_tool) {
        if (b.sensor == sensor) return b.tool;
    }
    return std::nullopt;
}

std::optional<StationIndex> station_of_sensor(const ProcessDescription& m, const SensorId& sensor) {
    if (const auto* b = find_binding(m, sensor)) {
        if (const auto* t = find_transition(m, b->transition)) return t->station;
        return std::nullopt;
    }
    for (const auto& step : m.order) {
        for (const auto& sig : step.signals) {
            if (sig.sensor == sensor) return step.index;
        }
    }
    return std::nullopt;
}

const SensorLabel* label_of_sensor(const ProcessDescription& m, const SensorId& sensor) {
    if (const auto* b = find_binding(m, sensor)) return &b->label;
    for (const auto& step : m.order) {
        for (const auto& sig : step.signals) {
            if (sig.sensor == sensor) return &sig.label;
        }
    }
    return nullptr;
}

const StateTransition* find_transition(const ProcessDescription& m, int id) {
    for (const auto& step : m.order) {
        for (const auto& t : step.transitions) {
            if (t.id == id) return &t;
        }
    }
    return nullptr;
}

const Timing* find_timing(const ProcessDescription& m, const TimingId& id) {
    for (const auto& u : m.timings) {
        if (u.id == id) return &u;
    }
    return nullptr;
}

const Rotation* find_rotation(const ProcessDescription& m, int id) {
    for (const auto& r : m.rotations) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

std::optional<StationIndex> station_of_timing(const ProcessDescription& m, const Timing& timing) {
    if (timing.kind == TimingKind::Transition) {
        if (const auto* t = find_transition(m, timing.ref)) return t->station;
    } else if (const auto* r = find_rotation(m, timing.ref)) {
        return r->from_position;
    }
    return std::nullopt;
}

std::vector<const Timing*> timings_for_step(const ProcessDescription& m, StationIndex step) {
    const auto& s = step_at(m, step);
    std::vector<const Timing*> out;
    for (const auto& t : s.transitions) {
        for (const auto& u : m.timings) {
            if (u.kind == TimingKind::Transition && u.ref == t.id) out.push_back(&u);
        }
    }
    for (const auto& u : m.timings) {
        if (u.kind != TimingKind::Rotation) continue;
        const auto* r = find_rotation(m, u.ref);
        if (r && r->from_position == step) out.push_back(&u);
    }
    return out;
}

std::optional<ToolId> tool_for_timing(const ProcessDescription& m, const Timing& timing) {
    if (timing.kind != TimingKind::Transition) return std::nullopt;
    std::optional<ToolId> tool;
    for (const auto& b : m.sensor_to_transition) {
        if (b.transition != timing.ref) continue;
        for (const auto& w : m.sensor_to_tool) {
            if (w.sensor != b.sensor) continue;
            if (tool && *tool != w.tool) return std::nullopt;  // ambiguous
            tool = w.tool;
        }
    }
    return tool;
}

std::vector<StationIndex> quality_stations(const ProcessDescription& m) {
    std::vector<StationIndex> out;
    for (const auto& step : m.order) {
        if (step.role == StationRole::QualityControl) out.push_back(step.index);
    }
    return out;
}

std::optional<StationIndex> station_with_role(const ProcessDescription& m, StationRole role) {
    for (const auto& step : m.order) {
        if (step.role == role) return step.index;
    }
    return std::nullopt;
}

} // namespace rimdiag
