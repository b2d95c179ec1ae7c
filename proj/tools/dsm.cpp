#include <CLI11.hpp>

#include "dsm/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Continuous Newton-type flow solver with theorem certificates"};
    app.require_subcommand(1);

    std::string config_path;
    dsm::cli::GlobalOptions opts;
    std::string out_dir;
    unsigned seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
        sub->add_option("--seed", seed, "seed override for noise and sampling");
    };

    CLI::App* solve = app.add_subcommand("solve", "integrate the flow, emit trajectory and reports");
    CLI::App* check = app.add_subcommand("check", "evaluate the certificate only");
    CLI::App* sweep = app.add_subcommand("sweep", "run the config once per sweep override");
    add_common(solve);
    add_common(check);
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    if (!out_dir.empty()) opts.out_dir = out_dir;
    if (solve->count("--seed") || check->count("--seed") || sweep->count("--seed")) opts.seed = seed;

    if (solve->parsed()) return dsm::cli::cmd_solve(config_path, opts);
    if (check->parsed()) return dsm::cli::cmd_check(config_path, opts);
    if (sweep->parsed()) return dsm::cli::cmd_sweep(config_path, opts);
    return 1;
}
