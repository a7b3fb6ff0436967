#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "rimdiag/errors.hpp"
#include "rimdiag/trace.hpp"

namespace rimdiag {

using nlohmann::json;

namespace {

template <typename Err>
json parse_line(const std::string& line, std::size_t lineno) {
    try {
        auto j = json::parse(line);
        if (!j.is_object()) throw Err(fmt::format("line {}: expected an object", lineno));
        return j;
    } catch (const json::parse_error& e) {
        throw Err(fmt::format("line {}: {}", lineno, e.what()));
    }
}

template <typename Err>
TraceEvent parse_event(const json& j, std::size_t lineno) {
    if (j.size() != 3 || !j.contains("t") || !j.contains("sensor") || !j.contains("value") ||
        !j["t"].is_number() || !j["sensor"].is_string() || !j["value"].is_number()) {
        throw Err(fmt::format("line {}: expected {{\"t\", \"sensor\", \"value\"}}", lineno));
    }
    return {j["t"].get<double>(), j["sensor"].get<std::string>(), j["value"].get<double>()};
}

json event_json(const TraceEvent& ev) { return {{"t", ev.time}, {"sensor", ev.sensor}, {"value", ev.value}}; }

} // namespace

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
    for (const auto& ev : trace.events) out << event_json(ev).dump() << '\n';
    json trailer = {{"verdict", trace.verdict.ok() ? "OK" : "NotOK"}, {"product_id", trace.product_id}};
    if (trace.verdict.station) trailer["station"] = trace.verdict.station->value;
    out << trailer.dump() << '\n';
}

Trace read_trace_jsonl(std::istream& in) {
    Trace trace;
    bool have_trailer = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (have_trailer) throw MalformedTrace(fmt::format("line {}: data after the verdict trailer", lineno));
        auto j = parse_line<MalformedTrace>(line, lineno);
        if (!j.contains("verdict")) {
            auto ev = parse_event<MalformedTrace>(j, lineno);
            if (ev.time < 0.0) throw MalformedTrace(fmt::format("line {}: negative internal time", lineno));
            if (!trace.events.empty() && ev.time < trace.events.back().time) {
                throw MalformedTrace(fmt::format("line {}: events out of time order", lineno));
            }
            trace.events.push_back(std::move(ev));
            continue;
        }
        const auto& v = j["verdict"];
        if (v == "OK") {
            trace.verdict = Verdict::good();
        } else if (v == "NotOK") {
            trace.verdict.kind = Verdict::Kind::NotOk;
        } else {
            throw MalformedTrace(fmt::format("line {}: verdict must be OK or NotOK", lineno));
        }
        if (j.contains("station")) {
            if (!j["station"].is_number_integer()) throw MalformedTrace(fmt::format("line {}: bad station", lineno));
            trace.verdict.station = StationIndex{j["station"].get<int>()};
        }
        if (j.contains("product_id")) {
            if (!j["product_id"].is_number_integer()) {
                throw MalformedTrace(fmt::format("line {}: bad product_id", lineno));
            }
            trace.product_id = j["product_id"].get<int>();
        }
        have_trailer = true;
    }
    if (!have_trailer) throw MalformedTrace("missing verdict trailer");
    return trace;
}

void write_machine_log_jsonl(std::ostream& out, const MachineLog& log) {
    for (const auto& rec : log.records) {
        if (const auto* c = std::get_if<CycleRecord>(&rec)) {
            out << json{{"t", c->time}, {"cycle", c->cycle}, {"occupancy", c->occupancy}}.dump() << '\n';
        } else {
            out << event_json(std::get<TraceEvent>(rec)).dump() << '\n';
        }
    }
}

MachineLog read_machine_log_jsonl(std::istream& in) {
    MachineLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = parse_line<MalformedLog>(line, lineno);
        if (j.contains("cycle")) {
            if (!j["cycle"].is_number_integer() || !j["t"].is_number() || !j["occupancy"].is_array()) {
                throw MalformedLog(fmt::format("line {}: bad cycle record", lineno));
            }
            CycleRecord c{j["cycle"].get<int>(), j["t"].get<double>(), {}};
            for (const auto& p : j["occupancy"]) {
                if (!p.is_number_integer()) throw MalformedLog(fmt::format("line {}: bad occupancy", lineno));
                c.occupancy.push_back(p.get<int>());
            }
            log.records.emplace_back(std::move(c));
        } else {
            log.records.emplace_back(parse_event<MalformedLog>(j, lineno));
        }
    }
    return log;
}

} // namespace rimdiag
