#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "locc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"LOCC conversion toolkit for bipartite pure states"};
    app.require_subcommand(1);

    double tol = 1e-9;
    std::string format = "human";
    const auto formatCheck = CLI::IsMember({"human", "structured"});

    std::string stateA, stateB, protocolPath, outPath, operatorPath;
    double prob = -1.0;
    bool useMax = false;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    auto addCommon = [&](CLI::App* cmd) {
        cmd->add_option("--tol", tol, "numerical tolerance for all predicates");
        cmd->add_option("--format", format, "output format")->check(formatCheck);
    };

    CLI::App* check = app.add_subcommand("check", "decide whether A can be converted into B");
    check->add_option("stateA", stateA, "source state file")->required();
    check->add_option("stateB", stateB, "target state file")->required();
    addCommon(check);

    CLI::App* synth = app.add_subcommand("synth", "synthesize a conversion protocol");
    synth->add_option("stateA", stateA, "source state file")->required();
    synth->add_option("stateB", stateB, "target state file")->required();
    CLI::Option* probOpt = synth->add_option("--prob", prob, "success probability to hit exactly");
    synth->add_flag("--max", useMax, "use the maximal achievable probability (default)")
        ->excludes(probOpt);
    synth->add_option("--out", outPath, "protocol file to write")->required();
    addCommon(synth);

    CLI::App* verify = app.add_subcommand("verify", "re-verify a protocol file against states");
    verify->add_option("protocol", protocolPath, "protocol file")->required();
    verify->add_option("stateA", stateA, "source state file")->required();
    verify->add_option("stateB", stateB, "target state file")->required();
    addCommon(verify);

    CLI::App* simulate = app.add_subcommand("simulate", "sample protocol outcomes");
    simulate->add_option("protocol", protocolPath, "protocol file")->required();
    simulate->add_option("stateA", stateA, "source state file")->required();
    simulate->add_option("--trials", trials, "number of trials");
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_option("--workers", workers, "worker threads (same result for any count)");
    addCommon(simulate);

    CLI::App* lopo = app.add_subcommand("lopopescu",
                                        "move a Bob contraction to Alice's side for a state");
    lopo->add_option("contraction", operatorPath, "operator file ({\"matrix\": ...})")->required();
    lopo->add_option("state", stateA, "state file")->required();
    lopo->add_option("--out", outPath, "output file for N and U")->required();
    addCommon(lopo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const locc::cli::Format fmt =
        format == "structured" ? locc::cli::Format::structured : locc::cli::Format::human;

    if (*check)
        return locc::cli::cmd_check(stateA, stateB, tol, fmt, std::cout, std::cerr);
    if (*synth) {
        std::optional<double> p;
        if (probOpt->count() > 0) p = prob;
        return locc::cli::cmd_synth(stateA, stateB, p, outPath, tol, fmt, std::cout, std::cerr);
    }
    if (*verify)
        return locc::cli::cmd_verify(protocolPath, stateA, stateB, tol, fmt, std::cout, std::cerr);
    if (*simulate)
        return locc::cli::cmd_simulate(protocolPath, stateA, trials, seed, workers, tol, fmt,
                                       std::cout, std::cerr);
    if (*lopo)
        return locc::cli::cmd_lopopescu(operatorPath, stateA, outPath, tol, fmt, std::cout,
                                        std::cerr);
    return 1;
}
