#include "rimdiag/evaluation.hpp"

#include <cstddef>
#include <iterator>

#include <fmt/format.h>

#include "rimdiag/errors.hpp"

namespace rimdiag {

namespace {

std::string_view mark(Cell c) { return c == Cell::Correct ? "✓" : "×"; }

Cell score(const MachineConfig& cfg, FaultKind kind, Algorithm alg, std::uint64_t seed) {
    const auto trace = simulate_product_run(cfg, FaultSpec{kind, std::nullopt, std::nullopt}, seed);
    if (trace.verdict.ok()) return Cell::Incorrect;
    const auto trigger = station_with_role(cfg.process, StationRole::EjectNotOk);
    if (!trigger) throw UnknownStep("process has no Not-OK eject station");
    const auto report = diagnose(alg, cfg.process, cfg.expected, trace.events, *trigger);
    return diagnosis_correct(report, ground_truth(cfg, kind)) ? Cell::Correct : Cell::Incorrect;
}

} // namespace

std::string_view fault_title(FaultKind kind) {
    switch (kind) {
    case FaultKind::None: return "None";
    case FaultKind::TimingJackCylinder: return "Timing Jack Cylinder";
    case FaultKind::PartWrongPosition: return "Part in Wrong Position";
    case FaultKind::PressureSensorBroken: return "Pressure Sensor Broken";
    case FaultKind::JackCylinderBroken: return "Jack Cylinder Broken";
    case FaultKind::PartBroken: return "Part Broken";
    }
    return "?";
}

EvaluationMatrix expected_matrix() {
    using enum Cell;
    return {{
        {FaultKind::TimingJackCylinder, Correct, Correct},
        {FaultKind::PartWrongPosition, Incorrect, Correct},
        {FaultKind::PressureSensorBroken, Incorrect, Incorrect},
        {FaultKind::JackCylinderBroken, Correct, Correct},
        {FaultKind::PartBroken, Incorrect, Incorrect},
    }};
}

std::optional<CandidateCause> ground_truth(const MachineConfig& cfg, FaultKind kind) {
    const auto& m = cfg.process;
    const auto& t = cfg.targets;
    switch (kind) {
    case FaultKind::TimingJackCylinder:
    case FaultKind::JackCylinderBroken: {
        auto tool = tool_for_sensor(m, t.jack_position);
        auto station = station_of_sensor(m, t.jack_position);
        if (!tool || !station) return std::nullopt;
        return CandidateCause{*tool, CauseKind::ToolFault, *tool, {}, *station};
    }
    case FaultKind::PartWrongPosition: {
        // The misplaced part is an upstream fault of the feeding step, as
        // named by whichever rule lists it.
        auto station = station_of_sensor(m, t.feeder_position);
        if (!station) return std::nullopt;
        for (const auto& rule : m.causal_rules) {
            for (const auto& c : rule.candidates) {
                if (c.kind == CauseKind::UpstreamProductFault && c.step == *station) return c;
            }
        }
        return std::nullopt;
    }
    case FaultKind::None:
    case FaultKind::PressureSensorBroken:
    case FaultKind::PartBroken:
        // Neither a broken QC sensor nor a defective part is in the model.
        return std::nullopt;
    }
    return std::nullopt;
}

bool diagnosis_correct(const DiagnosisReport& r, const std::optional<CandidateCause>& truth) {
    return truth && r.final.kind == FinalKind::Resolved && r.final.causes.size() == 1 &&
           same_cause(r.final.causes.front(), *truth);
}

EvaluationMatrix evaluate(const MachineConfig& cfg, std::uint64_t seed) {
    constexpr auto n_faults = static_cast<std::ptrdiff_t>(std::size(kEvaluatedFaults));
    std::vector<Cell> cells(static_cast<std::size_t>(2 * n_faults), Cell::Incorrect);
    std::vector<std::exception_ptr> errors(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < 2 * n_faults; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            cells[k] = score(cfg, kEvaluatedFaults[k / 2], k % 2 == 0 ? Algorithm::StepWise : Algorithm::MultiStep,
                             seed);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    EvaluationMatrix out;
    for (std::ptrdiff_t f = 0; f < n_faults; ++f) {
        const auto k = static_cast<std::size_t>(f);
        out.rows.push_back({kEvaluatedFaults[k], cells[2 * k], cells[2 * k + 1]});
    }
    return out;
}

std::string render_matrix(const EvaluationMatrix& m) {
    std::string out = fmt::format("{:<24}  {:<6}  {}\n", "Fault", "Alg. 1", "Alg. 2");
    for (const auto& row : m.rows) {
        out += fmt::format("{:<24}  {}       {}\n", fault_title(row.fault), mark(row.stepwise), mark(row.multistep));
    }
    return out;
}

std::vector<std::string> matrix_diff(const EvaluationMatrix& got, const EvaluationMatrix& want) {
    std::vector<std::string> out;
    for (const auto& w : want.rows) {
        const EvaluationRow* g = nullptr;
        for (const auto& r : got.rows) {
            if (r.fault == w.fault) g = &r;
        }
        if (!g) {
            out.push_back(fmt::format("{}: row missing", fault_title(w.fault)));
            continue;
        }
        if (g->stepwise != w.stepwise) {
            out.push_back(fmt::format("{} / Alg. 1: expected {}, got {}", fault_title(w.fault), mark(w.stepwise),
                                      mark(g->stepwise)));
        }
        if (g->multistep != w.multistep) {
            out.push_back(fmt::format("{} / Alg. 2: expected {}, got {}", fault_title(w.fault), mark(w.multistep),
                                      mark(g->multistep)));
        }
    }
    for (const auto& g : got.rows) {
        bool known = false;
        for (const auto& w : want.rows) known = known || w.fault == g.fault;
        if (!known) out.push_back(fmt::format("{}: unexpected row", fault_title(g.fault)));
    }
    return out;
}

} // namespace rimdiag
