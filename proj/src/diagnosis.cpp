#include "rimdiag/diagnosis.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rimdiag/errors.hpp"

namespace rimdiag {

namespace {

Deviation deviation_of(const Violation& v) {
    if (!v.observed) return Deviation::Missing;
    return *v.observed < v.admissible.lower ? Deviation::Below : Deviation::Above;
}

bool rule_matches(const CausalRule& rule, const Violation& v) {
    return rule.trigger_sensor == v.subject &&
           (rule.direction == Deviation::Any || rule.direction == deviation_of(v));
}

void append_unique(std::vector<CandidateCause>& out, const CandidateCause& c) {
    auto same = [&](const CandidateCause& x) { return same_cause(x, c); };
    if (std::none_of(out.begin(), out.end(), same)) out.push_back(c);
}

// One step's own verdict, before any cross-step reasoning.
struct StepEvaluation {
    StepReport report;
    std::optional<MemoryEntry> ambiguity;
};

StepEvaluation evaluate_step(const ProcessDescription& m, const ExpectedValueSet& e, StationIndex step,
                             std::span<const TraceEvent> events) {
    StepEvaluation out;
    auto& rep = out.report;
    rep.step = step;

    const auto formula = build_step_formula(e, m, step);
    const auto result = check_sat(formula, events);
    rep.violations = result.violations;
    if (result.sat()) return out;

    const auto names = extract_conflict_names(result);
    std::vector<const Violation*> timing;
    std::vector<const Violation*> value;
    for (const auto& v : result.violations) {
        (classify_violation(v) == FaultClass::TimingFault ? timing : value).push_back(&v);
    }

    // A timing conflict takes precedence over value conflicts of the same step.
    if (!timing.empty()) {
        const auto it = std::find_if(names.begin(), names.end(), [&](const std::string& n) {
            return std::any_of(timing.begin(), timing.end(), [&](const Violation* v) { return v->subject == n; });
        });
        rep.outcome = StepOutcome::TimingFault;
        rep.subject = *it;
        if (const auto* u = find_timing(m, rep.subject)) rep.candidates.push_back(timing_cause(*u, m));
        return out;
    }

    // Quality-control readings are the anomaly detection, never a root cause.
    if (step_at(m, step).role == StationRole::QualityControl) {
        rep.outcome = StepOutcome::UnexplainedViolation;
        rep.subject = names.front();
        return out;
    }

    // Prefer causes that explain every conflict of the step at once.
    std::vector<std::vector<CandidateCause>> sets;
    for (const auto* v : value) sets.push_back(candidate_causes(*v, m));
    std::vector<CandidateCause> shared;
    for (const auto& c : sets.front()) {
        bool everywhere = std::all_of(sets.begin() + 1, sets.end(), [&](const auto& s) {
            return std::any_of(s.begin(), s.end(), [&](const CandidateCause& x) { return same_cause(x, c); });
        });
        if (everywhere) append_unique(shared, c);
    }
    if (shared.empty()) {
        for (const auto& s : sets) {
            for (const auto& c : s) append_unique(shared, c);
        }
    }

    rep.candidates = shared;
    if (shared.size() == 1) {
        rep.outcome = StepOutcome::DefiniteCause;
        return out;
    }

    rep.outcome = StepOutcome::Ambiguous;
    MemoryEntry entry;
    entry.origin = step;
    entry.trigger = *value.front();
    entry.candidates = shared;
    bool trigger_from_rule = false;
    for (const auto* v : value) {
        for (const auto& rule : m.causal_rules) {
            if (!rule_matches(rule, *v)) continue;
            if (!trigger_from_rule && rule.candidates.size() > 1) {
                entry.trigger = *v;
                trigger_from_rule = true;
            }
            for (const auto& [id, d] : rule.discriminators) {
                bool survives = std::any_of(shared.begin(), shared.end(),
                                            [&](const CandidateCause& c) { return c.id == id; });
                if (survives) entry.discriminators.emplace(id, d);
            }
        }
    }
    out.ambiguity = std::move(entry);
    return out;
}

FinalDiagnosis aggregate(const std::vector<StepReport>& steps) {
    FinalDiagnosis fin;
    std::vector<CandidateCause> causes;
    std::vector<CandidateCause> open;
    bool ambiguous = false;
    for (const auto& s : steps) {
        switch (s.outcome) {
        case StepOutcome::TimingFault:
        case StepOutcome::DefiniteCause:
            for (const auto& c : s.candidates) append_unique(causes, c);
            break;
        case StepOutcome::Ambiguous:
            ambiguous = true;
            for (const auto& c : s.candidates) append_unique(open, c);
            break;
        case StepOutcome::Ok:
        case StepOutcome::UnexplainedViolation:
            break;
        }
    }
    if (ambiguous) {
        fin.kind = FinalKind::MultipleCandidates;
        for (const auto& c : open) append_unique(causes, c);
        fin.causes = std::move(causes);
    } else if (causes.size() == 1) {
        fin.kind = FinalKind::Resolved;
        fin.causes = std::move(causes);
    } else if (causes.size() > 1) {
        fin.kind = FinalKind::MultipleCandidates;
        fin.causes = std::move(causes);
    }
    return fin;
}

DiagnosisReport run(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                    std::span<const TraceEvent> trace, StationIndex trigger) {
    step_at(m, trigger);  // validates the index
    const auto slices = slice_trace_by_step(m, trace);
    if (slices.at(trigger).empty()) {
        throw TraceIncomplete(fmt::format("trace has no events from trigger station {}", trigger.value));
    }

    DiagnosisReport report;
    report.algorithm = algorithm;
    report.trigger.station = trigger;

    ExplanationMemory memory;
    for (int s = trigger.value - 1; s >= 1; --s) {
        const StationIndex step{s};
        const auto& events = slices.at(step);
        auto eval = evaluate_step(m, e, step, events);
        report.steps.push_back(std::move(eval.report));

        if (algorithm != Algorithm::MultiStep) continue;
        if (eval.ambiguity) {
            memory.entries.push_back(std::move(*eval.ambiguity));
        }
        while (!memory.empty()) {
            auto res = check_sat_with_memory(e, m, step, events, memory);
            if (res.status != MemoryResolution::Status::Confirmed) break;
            const auto origin = res.entry->origin;
            auto it = std::find_if(report.steps.begin(), report.steps.end(),
                                   [&](const StepReport& r) { return r.step == origin; });
            it->alternatives = it->candidates;
            it->candidates = {*res.confirmed};
            it->outcome = StepOutcome::DefiniteCause;
            it->evidence_step = step;
            report.steps.back().resolves.push_back(origin);
        }
    }

    // Earliest failing quality check in product order is the detection.
    for (auto it = report.steps.rbegin(); it != report.steps.rend(); ++it) {
        if (it->outcome == StepOutcome::UnexplainedViolation) {
            report.trigger.detecting_station = it->step;
            report.trigger.sensor = it->subject;
            break;
        }
    }
    report.final = aggregate(report.steps);
    return report;
}

} // namespace

StepSlices slice_trace_by_step(const ProcessDescription& m, std::span<const TraceEvent> trace) {
    StepSlices slices;
    for (const auto& step : m.order) slices[step.index];
    std::map<SensorId, StationIndex> owner;
    for (const auto& ev : trace) {
        auto it = owner.find(ev.sensor);
        if (it == owner.end()) {
            auto station = station_of_sensor(m, ev.sensor);
            if (!station) throw UnknownSensorInTrace(fmt::format("sensor '{}' is not part of the process", ev.sensor));
            it = owner.emplace(ev.sensor, *station).first;
        }
        slices[it->second].push_back(ev);
    }
    for (auto& [step, events] : slices) {
        std::stable_sort(events.begin(), events.end(),
                         [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
    }
    return slices;
}

bool same_cause(const CandidateCause& a, const CandidateCause& b) {
    return a.kind == b.kind && a.name() == b.name() && a.step == b.step;
}

std::vector<CandidateCause> candidate_causes(const Violation& v, const ProcessDescription& m) {
    for (const auto& rule : m.causal_rules) {
        if (rule_matches(rule, v)) return rule.candidates;
    }
    const auto station = station_of_sensor(m, v.subject).value_or(StationIndex{});
    CandidateCause cause;
    cause.step = station;
    if (auto tool = tool_for_sensor(m, v.subject)) {
        cause.id = *tool;
        cause.kind = CauseKind::ToolFault;
        cause.tool = *tool;
    } else {
        cause.id = v.subject;
        cause.kind = CauseKind::UpstreamProductFault;
        cause.description = v.subject;
    }
    return {cause};
}

CandidateCause timing_cause(const Timing& timing, const ProcessDescription& m) {
    CandidateCause cause;
    cause.step = station_of_timing(m, timing).value_or(StationIndex{});
    if (auto tool = tool_for_timing(m, timing)) {
        cause.id = *tool;
        cause.kind = CauseKind::ToolFault;
        cause.tool = *tool;
    } else {
        cause.id = timing.id;
        cause.kind = CauseKind::UpstreamProductFault;
        cause.description = "timing " + timing.id;
    }
    return cause;
}

DiagnosisReport diagnose_stepwise(const ProcessDescription& m, const ExpectedValueSet& e,
                                  std::span<const TraceEvent> trace, StationIndex trigger) {
    return run(Algorithm::StepWise, m, e, trace, trigger);
}

DiagnosisReport diagnose_multistep(const ProcessDescription& m, const ExpectedValueSet& e,
                                   std::span<const TraceEvent> trace, StationIndex trigger) {
    return run(Algorithm::MultiStep, m, e, trace, trigger);
}

DiagnosisReport diagnose(Algorithm algorithm, const ProcessDescription& m, const ExpectedValueSet& e,
                         std::span<const TraceEvent> trace, StationIndex trigger) {
    return run(algorithm, m, e, trace, trigger);
}

std::string_view algorithm_name(Algorithm a) {
    return a == Algorithm::StepWise ? "stepwise" : "multistep";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
    if (text == "stepwise") return Algorithm::StepWise;
    if (text == "multistep") return Algorithm::MultiStep;
    return std::nullopt;
}

} // namespace rimdiag
