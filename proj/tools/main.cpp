#include <string>

#include <CLI11.hpp>

#include "hhmm/commands.hpp"

// hhmm <simulate|fit|diagnose> <config.json> [--data PATH] [--out DIR] [--seed N]

int main(int argc, char** argv) {
    CLI::App app{"Bayesian inference for two-level hierarchical hidden Markov models"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string data, out;
        std::uint64_t seed = 0;
        bool has_data = false, has_out = false, has_seed = false;
    };

    auto add_common = [](CLI::App* cmd, Args& a, const char* data_help) {
        cmd->add_option("config", a.config, "experiment configuration (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--data", a.data, data_help)->each([&a](const std::string&) {
            a.has_data = true;
        });
        cmd->add_option("--out", a.out, "output directory override")
            ->each([&a](const std::string&) { a.has_out = true; });
        cmd->add_option("--seed", a.seed, "seed override")->each([&a](const std::string&) {
            a.has_seed = true;
        });
    };

    Args sim_args, fit_args, diag_args;
    CLI::App* sim = app.add_subcommand("simulate", "draw a data set from the ground truth");
    add_common(sim, sim_args, "(not accepted by simulate)");
    CLI::App* fit = app.add_subcommand("fit", "sample the posterior for a data set");
    add_common(fit, fit_args, "input data CSV override");
    CLI::App* diag = app.add_subcommand("diagnose", "summaries and mixing diagnostics of a trace");
    add_common(diag, diag_args, "input trace CSV override");

    CLI11_PARSE(app, argc, argv);

    auto overrides = [](const Args& a) {
        hhmm::CliOverrides o;
        if (a.has_data)
            o.data = a.data;
        if (a.has_out)
            o.out = a.out;
        if (a.has_seed)
            o.seed = a.seed;
        return o;
    };

    if (sim->parsed())
        return hhmm::cmd_simulate(sim_args.config, overrides(sim_args));
    if (fit->parsed())
        return hhmm::cmd_fit(fit_args.config, overrides(fit_args));
    return hhmm::cmd_diagnose(diag_args.config, overrides(diag_args));
}
