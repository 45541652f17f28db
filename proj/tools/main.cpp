#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pflow/commands.hpp"

namespace {

struct Args {
    std::string case_path;
    std::string family;
    std::vector<std::string> methods;
    double tol = 0.0;
    std::size_t max_iters = 0;
    std::uint64_t seed = 0;
    std::string out;
    bool no_timing = false;
    double gradient_scale = 1.0;
};

void add_common(CLI::App* cmd, Args& a, bool with_methods) {
    cmd->add_option("--case", a.case_path, "Case file (JSON, or a .buses.csv/.branches.csv pair) or bundled case name")
        ->required();
    cmd->add_option("--family", a.family, "Problem family")->required()->check(CLI::IsMember({"epds", "epts"}));
    if (with_methods) cmd->add_option("--method", a.methods, "Method name(s), comma separated")->delimiter(',');
    cmd->add_option("--tol", a.tol, "Stopping tolerance (gradient norm or mismatch)");
    cmd->add_option("--max-iters", a.max_iters, "Iteration budget");
    cmd->add_option("--seed", a.seed, "Seed for random directions and states");
    cmd->add_option("--out", a.out, "Output directory for CSV artifacts");
    cmd->add_flag("--no-timing", a.no_timing, "Write zero times so outputs are byte-reproducible");
    cmd->add_option("--perturb-gradient", a.gradient_scale)->group("");
}

pflow::cli::RunSpec to_spec(const CLI::App& cmd, const Args& a) {
    pflow::cli::RunSpec s;
    s.case_path = a.case_path;
    s.family = pflow::cli::parse_family(a.family);
    s.methods = a.methods;
    if (cmd.count("--tol")) s.tol = a.tol;
    if (cmd.count("--max-iters")) s.max_iters = a.max_iters;
    s.seed = a.seed;
    if (!a.out.empty()) s.out_dir = a.out;
    s.record_time = !a.no_timing;
    s.gradient_scale = a.gradient_scale;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pflow: power flow on manifolds with classical reference solvers"};
    app.require_subcommand(1);
    Args args;
    auto* run = app.add_subcommand("run", "Solve one case with one method");
    auto* compare = app.add_subcommand("compare", "Solve one case with several methods");
    auto* checkgrad = app.add_subcommand("checkgrad", "Slope test of the analytic derivatives");
    add_common(run, args, true);
    add_common(compare, args, true);
    add_common(checkgrad, args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pflow::cli::kExitInput;
    }

    if (run->parsed()) return pflow::cli::cmd_run(to_spec(*run, args), std::cout, std::cerr);
    if (compare->parsed()) return pflow::cli::cmd_compare(to_spec(*compare, args), std::cout, std::cerr);
    return pflow::cli::cmd_checkgrad(to_spec(*checkgrad, args), std::cout, std::cerr);
}
