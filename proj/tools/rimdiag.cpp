#include <iostream>

#include "CLI11.hpp"
#include "rimdiag/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Diagnosis toolkit for rotary indexing machines"};
    app.require_subcommand(1);

    rimdiag::SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate one product (or the whole machine) and write its trace");
    simulate->add_option("--config", sim.config, "Machine configuration")->required();
    simulate->add_option("--fault", sim.fault, "Injected fault kind")->capture_default_str();
    simulate->add_option("--magnitude", sim.magnitude, "Fault magnitude");
    simulate->add_option("--seed", sim.seed, "Jitter seed")->capture_default_str();
    simulate->add_option("--products", sim.products, "Products fed through the machine")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim.out, "Trace file (JSON lines)");
    simulate->add_option("--log", sim.log, "Readable machine log; JSON-lines twin at <log>.jsonl");

    rimdiag::DiagnoseOptions diag;
    auto* diagnose = app.add_subcommand("diagnose", "Diagnose a Not-OK product trace");
    diagnose->add_option("--config", diag.config, "Machine configuration")->required();
    diagnose->add_option("--trace", diag.trace, "Trace file (JSON lines)")->required();
    diagnose->add_option("--algorithm", diag.algorithm, "stepwise or multistep")->capture_default_str();
    diagnose->add_option("--format", diag.format, "text or json")->capture_default_str();
    diagnose->add_option("--out", diag.out, "Write the JSON report here");

    std::filesystem::path eval_config;
    std::uint64_t eval_seed = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Run every fault scenario through both algorithms");
    evaluate->add_option("--config", eval_config, "Machine configuration")->required();
    evaluate->add_option("--seed", eval_seed, "Jitter seed")->capture_default_str();

    std::filesystem::path val_config;
    auto* validate = app.add_subcommand("validate", "Check a machine configuration");
    validate->add_option("--config", val_config, "Machine configuration")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rimdiag::kExitInput;
    }

    if (*simulate) return rimdiag::cmd_simulate(sim, std::cout, std::cerr);
    if (*diagnose) return rimdiag::cmd_diagnose(diag, std::cout, std::cerr);
    if (*evaluate) return rimdiag::cmd_evaluate(eval_config, eval_seed, std::cout, std::cerr);
    return rimdiag::cmd_validate(val_config, std::cout, std::cerr);
}
