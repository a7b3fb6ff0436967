#include "rimdiag/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rimdiag/diagnosis.hpp"
#include "rimdiag/errors.hpp"
#include "rimdiag/evaluation.hpp"
#include "rimdiag/trace.hpp"

namespace rimdiag {

namespace {

std::string_view error_name(const Error& e) {
    if (dynamic_cast<const OrderError*>(&e)) return "OrderError";
    if (dynamic_cast<const ReferenceError*>(&e)) return "ReferenceError";
    if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
    if (dynamic_cast<const InvalidFault*>(&e)) return "InvalidFault";
    if (dynamic_cast<const MalformedTrace*>(&e)) return "MalformedTrace";
    if (dynamic_cast<const MalformedLog*>(&e)) return "MalformedLog";
    if (dynamic_cast<const UnknownSensorInTrace*>(&e)) return "UnknownSensorInTrace";
    if (dynamic_cast<const TraceIncomplete*>(&e)) return "TraceIncomplete";
    return "Error";
}

void report(std::ostream& err, const Error& e) { fmt::print(err, "error: {}: {}\n", error_name(e), e.what()); }

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write '{}'", p.string()));
    return f;
}

} // namespace

MachineConfig load_machine_config(const std::filesystem::path& path) {
    const auto doc = read_json_file(path);
    auto process = load_process_description(doc);
    auto expected = load_expected_values(doc, process);
    return reference_machine(std::move(process), std::move(expected));
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    MachineConfig cfg;
    try {
        cfg = load_machine_config(opt.config);
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    const auto kind = parse_fault_kind(opt.fault);
    if (!kind) {
        std::vector<std::string_view> names;
        for (auto k : kAllFaultKinds) names.push_back(fault_kind_name(k));
        fmt::print(err, "error: unknown fault kind '{}' (one of: {})\n", opt.fault, fmt::join(names, ", "));
        return kExitFault;
    }
    const FaultSpec fault{*kind, opt.magnitude, std::nullopt};
    try {
        Trace trace;
        if (opt.products > 1 || opt.log) {
            auto [traces, log] = simulate_machine(cfg, opt.products, {fault}, opt.seed);
            trace = traces.front();
            if (opt.log) {
                auto text = open_out(*opt.log);
                text << render_machine_log(log, cfg.process, kLogEpoch);
                auto twin = opt.log->string() + ".jsonl";
                auto structured = open_out(twin);
                write_machine_log_jsonl(structured, log);
            }
        } else {
            trace = simulate_product_run(cfg, fault, opt.seed);
        }
        if (opt.out) {
            auto f = open_out(*opt.out);
            write_trace_jsonl(f, trace);
            fmt::print(out, "product {}: {}\n", trace.product_id,
                       trace.verdict.ok() ? std::string("OK")
                                          : fmt::format("NotOK at station {}", trace.verdict.station->value));
        } else {
            write_trace_jsonl(out, trace);
        }
    } catch (const InvalidFault& e) {
        report(err, e);
        return kExitFault;
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    return kExitOk;
}

int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out, std::ostream& err) {
    const auto alg = parse_algorithm(opt.algorithm);
    if (!alg) {
        fmt::print(err, "error: unknown algorithm '{}' (stepwise or multistep)\n", opt.algorithm);
        return kExitInput;
    }
    if (opt.format != "text" && opt.format != "json") {
        fmt::print(err, "error: unknown format '{}' (text or json)\n", opt.format);
        return kExitInput;
    }
    MachineConfig cfg;
    Trace trace;
    try {
        cfg = load_machine_config(opt.config);
        std::ifstream in(opt.trace, std::ios::binary);
        if (!in) throw Error(fmt::format("cannot open '{}'", opt.trace.string()));
        trace = read_trace_jsonl(in);
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    if (trace.verdict.ok()) {
        out << "product OK: diagnosis not triggered\n";
        return kExitOk;
    }
    try {
        const auto trigger = station_with_role(cfg.process, StationRole::EjectNotOk);
        if (!trigger) throw UnknownStep("process has no Not-OK eject station");
        const auto r = diagnose(*alg, cfg.process, cfg.expected, trace.events, *trigger);
        const auto j = report_to_json(r);
        if (opt.format == "json") {
            out << j.dump(2) << '\n';
        } else {
            out << render_report(r);
        }
        if (opt.out) {
            auto f = open_out(*opt.out);
            f << j.dump(2) << '\n';
        }
    } catch (const UnknownSensorInTrace& e) {
        report(err, e);
        return kExitMismatch;
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    return kExitOk;
}

int cmd_evaluate(const std::filesystem::path& config, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    EvaluationMatrix got;
    try {
        got = evaluate(load_machine_config(config), seed);
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    out << render_matrix(got);
    const auto diff = matrix_diff(got, expected_matrix());
    if (diff.empty()) {
        out << "matches the expected pattern\n";
        return kExitOk;
    }
    out << "deviates from the expected pattern:\n";
    for (const auto& line : diff) out << "  " << line << '\n';
    return kExitDeviation;
}

int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
    nlohmann::json doc;
    try {
        doc = read_json_file(config);
    } catch (const Error& e) {
        report(err, e);
        return kExitInput;
    }
    try {
        auto process = load_process_description(doc);
        auto expected = load_expected_values(doc, process);
        reference_machine(std::move(process), std::move(expected));
    } catch (const Error& e) {
        fmt::print(out, "{}: {}\n", error_name(e), e.what());
        return kExitInput;
    }
    out << "configuration valid\n";
    return kExitOk;
}

} // namespace rimdiag
