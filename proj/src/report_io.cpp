#include <algorithm>

#include <fmt/format.h>

#include "rimdiag/diagnosis.hpp"

namespace rimdiag {

using nlohmann::json;

namespace {

std::string format_observed(const std::optional<double>& v) {
    return v ? fmt::format("{:.6g}", *v) : std::string("missing");
}

std::string format_interval(const Interval& i) { return fmt::format("[{:.6g}, {:.6g}]", i.lower, i.upper); }

std::string describe(const CandidateCause& c) {
    return fmt::format("{} ({} at step {})", c.name(),
                       c.kind == CauseKind::ToolFault ? "tool fault" : "upstream product fault", c.step.value);
}

std::string_view outcome_name(StepOutcome o) {
    switch (o) {
    case StepOutcome::Ok: return "ok";
    case StepOutcome::TimingFault: return "timing_fault";
    case StepOutcome::DefiniteCause: return "definite_cause";
    case StepOutcome::Ambiguous: return "ambiguous";
    case StepOutcome::UnexplainedViolation: return "unexplained_violation";
    }
    return "?";
}

std::string_view final_name(FinalKind k) {
    switch (k) {
    case FinalKind::Resolved: return "resolved";
    case FinalKind::MultipleCandidates: return "multiple_candidates";
    case FinalKind::NoCauseFound: return "no_cause_found";
    }
    return "?";
}

const Violation* violation_for(const StepReport& s, const std::string& subject) {
    for (const auto& v : s.violations) {
        if (v.subject == subject) return &v;
    }
    return nullptr;
}

void render_ambiguous(std::string& out, int step, const std::vector<CandidateCause>& candidates) {
    out += fmt::format("Fault found in step {}\nMore than one explanation possible\n", step);
    for (const auto& c : candidates) out += fmt::format("  candidate: {}\n", describe(c));
}

json cause_json(const CandidateCause& c) {
    json j = {{"id", c.id}, {"step", c.step.value}};
    if (c.kind == CauseKind::ToolFault) {
        j["kind"] = "tool_fault";
        j["tool"] = c.tool;
    } else {
        j["kind"] = "upstream_product_fault";
        j["description"] = c.description;
    }
    return j;
}

json causes_json(const std::vector<CandidateCause>& cs) {
    json arr = json::array();
    for (const auto& c : cs) arr.push_back(cause_json(c));
    return arr;
}

} // namespace

std::string render_report(const DiagnosisReport& r) {
    std::string out;
    out += fmt::format("Diagnosis ({}) triggered by station {}: product Not-OK\n", algorithm_name(r.algorithm),
                       r.trigger.station.value);
    if (r.trigger.detecting_station) {
        out += fmt::format("Detected at station {} by {}\n", r.trigger.detecting_station->value,
                           r.trigger.sensor.value_or("?"));
    } else {
        out += "No quality-control reading in the trace explains the verdict\n";
    }

    for (const auto& s : r.steps) {
        const int n = s.step.value;
        switch (s.outcome) {
        case StepOutcome::Ok:
            out += fmt::format("Step {}: OK\n", n);
            break;
        case StepOutcome::TimingFault: {
            out += fmt::format("Error in step {}: Timing fault\n", n);
            if (const auto* v = violation_for(s, s.subject)) {
                out += fmt::format("  {} took {}, admissible {}\n", s.subject, format_observed(v->observed),
                                   format_interval(v->admissible));
            }
            for (const auto& c : s.candidates) out += fmt::format("  affected: {}\n", describe(c));
            break;
        }
        case StepOutcome::DefiniteCause:
            if (s.evidence_step) {
                render_ambiguous(out, n, s.alternatives);
            } else {
                out += fmt::format("Error in step {}: Fault found\nMost likely cause: {}\n", n, s.candidates.front().name());
            }
            break;
        case StepOutcome::Ambiguous:
            render_ambiguous(out, n, s.candidates);
            break;
        case StepOutcome::UnexplainedViolation: {
            const auto* v = violation_for(s, s.subject);
            out += fmt::format("Step {}: quality control reports {} = {}, admissible {}\n", n, s.subject,
                               v ? format_observed(v->observed) : std::string("?"),
                               v ? format_interval(v->admissible) : std::string("?"));
            break;
        }
        }
        for (const auto& origin : s.resolves) {
            auto it = std::find_if(r.steps.begin(), r.steps.end(),
                                   [&](const StepReport& x) { return x.step == origin; });
            out += "Explanation for fault in earlier step found!\n";
            out += fmt::format("Error in step {}: Fault found\nMost likely cause: {} (evidence from step {})\n",
                               origin.value, it->candidates.front().name(), n);
        }
    }

    switch (r.final.kind) {
    case FinalKind::Resolved:
        out += fmt::format("Result: resolved: {}\n", describe(r.final.causes.front()));
        break;
    case FinalKind::MultipleCandidates: {
        std::vector<std::string> names;
        for (const auto& c : r.final.causes) names.push_back(describe(c));
        out += fmt::format("Result: multiple candidates: {}\n", fmt::join(names, "; "));
        break;
    }
    case FinalKind::NoCauseFound:
        out += "Result: no cause found\n";
        break;
    }
    return out;
}

json report_to_json(const DiagnosisReport& r) {
    json trigger = {{"station", r.trigger.station.value}};
    trigger["detecting_station"] = r.trigger.detecting_station ? json(r.trigger.detecting_station->value) : json();
    trigger["sensor"] = r.trigger.sensor ? json(*r.trigger.sensor) : json();

    json steps = json::array();
    for (const auto& s : r.steps) {
        json violations = json::array();
        for (const auto& v : s.violations) {
            violations.push_back({{"kind", v.kind == ViolationKind::Value ? "value" : "timing"},
                                  {"subject", v.subject},
                                  {"observed", v.observed ? json(*v.observed) : json()},
                                  {"admissible", {v.admissible.lower, v.admissible.upper}}});
        }
        json step = {{"step", s.step.value},
                     {"outcome", outcome_name(s.outcome)},
                     {"candidates", causes_json(s.candidates)},
                     {"violations", std::move(violations)}};
        if (!s.subject.empty()) step["subject"] = s.subject;
        if (!s.alternatives.empty()) step["alternatives"] = causes_json(s.alternatives);
        if (s.evidence_step) step["evidence_step"] = s.evidence_step->value;
        if (!s.resolves.empty()) {
            json res = json::array();
            for (const auto& o : s.resolves) res.push_back(o.value);
            step["resolves"] = std::move(res);
        }
        steps.push_back(std::move(step));
    }

    return {{"algorithm", algorithm_name(r.algorithm)},
            {"trigger", std::move(trigger)},
            {"steps", std::move(steps)},
            {"final", {{"kind", final_name(r.final.kind)}, {"causes", causes_json(r.final.causes)}}}};
}

} // namespace rimdiag
