#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rimdiag/cli.hpp"
#include "rimdiag/constraint_core.hpp"
#include "rimdiag/process_model.hpp"
#include "rimdiag/simulator.hpp"

namespace testing {

inline const char* reference_path() { return RIMDIAG_REFERENCE_CONFIG; }

inline const nlohmann::json& reference_doc() {
    static const nlohmann::json doc = rimdiag::read_json_file(reference_path());
    return doc;
}

inline const rimdiag::MachineConfig& reference_config() {
    static const rimdiag::MachineConfig cfg = rimdiag::load_machine_config(reference_path());
    return cfg;
}

// Brute-force evaluation of a step formula, written without reference to
// check_sat: every constraint is judged by scanning all events.
struct OracleVerdict {
    bool sat = true;
    std::set<std::string> violated;
};

inline double pick_time(const std::vector<rimdiag::TraceEvent>& events, const rimdiag::EventRole& role, bool& found) {
    found = false;
    double best = 0.0;
    for (const auto& ev : events) {
        if (ev.sensor != role.sensor) continue;
        const bool better = role.occurrence == rimdiag::Occurrence::First ? ev.time < best : ev.time >= best;
        if (!found || better) best = ev.time;
        found = true;
    }
    return best;
}

inline OracleVerdict oracle(const rimdiag::StepFormula& f, const std::vector<rimdiag::TraceEvent>& events) {
    OracleVerdict out;
    for (const auto& c : f.value_constraints) {
        int inside = 0;
        for (const auto& ev : events) {
            if (ev.sensor == c.sensor && ev.value >= c.bounds.lower && ev.value <= c.bounds.upper) ++inside;
        }
        if (inside == 0) out.violated.insert("v:" + c.sensor);
    }
    for (const auto& c : f.timing_constraints) {
        bool has_start = false;
        bool has_end = false;
        const double t0 = pick_time(events, c.start, has_start);
        const double t1 = pick_time(events, c.end, has_end);
        const double d = t1 - t0;
        if (!has_start || !has_end || d < c.window.lower || d > c.window.upper) out.violated.insert("t:" + c.id);
    }
    out.sat = out.violated.empty();
    return out;
}

struct Instance {
    rimdiag::StepFormula formula;
    std::vector<rimdiag::TraceEvent> events;
};

// Small random formulas over a handful of sensors so that hits, misses and
// missing readings all occur often.
inline Instance random_instance(std::mt19937_64& rng) {
    static const std::vector<std::string> sensors = {"a", "b", "c", "d"};
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto below = [&](int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)); };

    Instance inst;
    inst.formula.step = rimdiag::StationIndex{1};
    const int n_events = below(9);
    double t = 0.0;
    for (int i = 0; i < n_events; ++i) {
        t += uniform(0.01, 0.5);
        inst.events.push_back({t, sensors[below(4)], std::round(uniform(0.0, 10.0) * 2.0) / 2.0});
    }

    std::vector<std::string> pool = sensors;
    std::shuffle(pool.begin(), pool.end(), rng);
    const int n_values = below(4);
    for (int i = 0; i < n_values; ++i) {
        const double lo = std::round(uniform(0.0, 8.0) * 2.0) / 2.0;
        inst.formula.value_constraints.push_back({pool[i], {lo, lo + std::round(uniform(0.0, 4.0) * 2.0) / 2.0}});
    }
    const int n_timings = below(3);
    for (int i = 0; i < n_timings; ++i) {
        rimdiag::TimingConstraint c;
        c.id = "u" + std::to_string(i);
        c.start = {sensors[below(4)], below(2) ? rimdiag::Occurrence::First : rimdiag::Occurrence::Last};
        c.end = {sensors[below(4)], below(2) ? rimdiag::Occurrence::First : rimdiag::Occurrence::Last};
        const double lo = uniform(-1.0, 2.0);
        c.window = {lo, lo + uniform(0.0, 2.0)};
        inst.formula.timing_constraints.push_back(c);
    }
    return inst;
}

inline std::set<std::string> violated_subjects(const rimdiag::SatResult& r) {
    std::set<std::string> out;
    for (const auto& v : r.violations) out.insert((v.kind == rimdiag::ViolationKind::Value ? "v:" : "t:") + v.subject);
    return out;
}

} // namespace testing
