#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"3/2 stochastic volatility pricing engine"};
    app.require_subcommand(1, 1);

    cli::Options opt;
    std::uint64_t seed = 0;
    auto common = [&](CLI::App* sub, bool pricing) {
        sub->add_option("--config", opt.config_path, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_path, "output CSV (overrides [output] path)");
        if (pricing) {
            sub->add_option("--sweep", opt.sweeps, "KEY=start:end:count or KEY=a,b,c; repeatable")
                ->take_all()
                ->allow_extra_args(true);
            sub->add_flag("--mc-check", opt.mc_check, "also run the Monte Carlo oracle");
            sub->add_option("--seed", seed, "override [simulation] seed");
        }
    };
    common(app.add_subcommand("validate", "parse a config and check admissibility"), false);
    common(app.add_subcommand("price", "price the product block, one CSV row per sweep point"), true);
    common(app.add_subcommand("grid", "emit a density or CF grid as CSV"), false);
    common(app.add_subcommand("mc-compare", "analytic price next to the Monte Carlo oracle"), true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_config;
    }
    opt.command = app.get_subcommands().front()->get_name();
    if (auto* s = app.get_subcommands().front()->get_option_no_throw("--seed"); s && s->count() > 0) opt.seed = seed;
    return cli::run(opt, std::cout, std::cerr);
}
