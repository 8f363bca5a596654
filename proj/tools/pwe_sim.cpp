// SPDX-License-Identifier: Apache-2.0
// Command line front end: run a scenario, validate one, or diff two
// report directories.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pwe/report.hpp"
#include "pwe/scenario.hpp"

namespace {

int cmd_run(const std::string& file, const std::string& mode, const std::string& out,
            long long seed, int steps) {
    pwe::Scenario sc;
    try {
        sc = pwe::load_scenario(file);
    } catch (const pwe::ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    if (seed >= 0) sc.params.seed = static_cast<unsigned long>(seed);
    const pwe::RunMode rm = mode == "natural" ? pwe::RunMode::Natural : pwe::RunMode::Pwe;
    const pwe::RunReport rep = pwe::run(sc, rm, steps);
    if (!out.empty()) pwe::emit_report(rep, out);
    std::cout << pwe::metrics_text(rep);
    return 0;
}

int cmd_validate(const std::string& file) {
    try {
        (void)pwe::load_scenario(file);
    } catch (const pwe::ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    std::cout << file << ": ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"programmable wireless environment simulator"};
    app.require_subcommand(1);

    std::string file, mode = "pwe", out;
    long long seed = -1;
    int steps = -1;

    CLI::App* run = app.add_subcommand("run", "simulate a scenario");
    run->add_option("file", file, "scenario file")->required();
    run->add_option("--mode", mode, "pwe or natural")
        ->check(CLI::IsMember({"pwe", "natural"}));
    run->add_option("--out", out, "directory for report files");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--steps", steps, "limit a trajectory run to its first N steps");

    CLI::App* validate = app.add_subcommand("validate", "parse and check a scenario");
    validate->add_option("file", file, "scenario file")->required();

    std::string dir_a, dir_b;
    CLI::App* compare = app.add_subcommand("compare", "diff two report directories");
    compare->add_option("dir_a", dir_a, "first report directory")->required();
    compare->add_option("dir_b", dir_b, "second report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(file, mode, out, seed, steps);
        if (validate->parsed()) return cmd_validate(file);
        if (compare->parsed()) return pwe::compare_reports(dir_a, dir_b, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
