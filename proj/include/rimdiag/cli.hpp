#pragma once

// Subcommands of the rimdiag tool as plain functions, so tests can call them
// without spawning a process. Each returns the process exit status:
//   0 ok, 1 unreadable or invalid input, 2 bad fault, 3 trace does not match
//   the configuration, 4 evaluation deviates from the expected pattern.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rimdiag/simulator.hpp"

namespace rimdiag {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 1,
    kExitFault = 2,
    kExitMismatch = 3,
    kExitDeviation = 4,
};

/// Process description, expected values and the reference schedule from one
/// configuration document.
MachineConfig load_machine_config(const std::filesystem::path& path);

struct SimulateOptions {
    std::filesystem::path config;
    std::string fault = "none";
    std::optional<double> magnitude;
    std::uint64_t seed = 0;
    int products = 1;                           // > 1 runs the whole machine
    std::optional<std::filesystem::path> out;   // trace of product 1; stdout if unset
    std::optional<std::filesystem::path> log;   // readable log; JSON-lines twin at <log>.jsonl
};

struct DiagnoseOptions {
    std::filesystem::path config;
    std::filesystem::path trace;
    std::string algorithm = "multistep";
    std::string format = "text";
    std::optional<std::filesystem::path> out;  // JSON report
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const std::filesystem::path& config, std::uint64_t seed, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

} // namespace rimdiag
