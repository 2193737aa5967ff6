// mcgl: Maxwell solutions of the mean-curvature Ginzburg-Landau energy and
// the associated Cahn-Hilliard flow.
#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "commands.hpp"
#include "config.hpp"
#include "mcgl/errors.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<double> eps, r;
    std::optional<int> n;
    std::optional<std::string> init, output_dir;
};

}  // namespace

int main(int argc, char** argv) {
    using namespace mcgl::cli;
    CLI::App app{"Maxwell solutions of the mean-curvature Ginzburg-Landau energy"};
    app.set_version_flag("--version", std::string("mcgl ") + kVersion);
    app.require_subcommand(1);
    Flags fl;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", fl.config, "INI configuration file");
        sub->add_option("--output-dir", fl.output_dir, "directory for artifacts");
    };
    auto* mp = app.add_subcommand("maxwell-point", "equal-area construction");
    auto* solve = app.add_subcommand("solve", "simple (one-interface) solution and profile");
    auto* sweep = app.add_subcommand("sweep", "solve over the eps x r grid");
    auto* rank = app.add_subcommand("rank", "energy ranking of n-transition solutions");
    auto* sv = app.add_subcommand("second-variation", "instability certificate for n >= 2 transitions");
    auto* lim = app.add_subcommand("limit-check", "distance to the sharp-interface limit");
    auto* sim = app.add_subcommand("simulate", "Cahn-Hilliard gradient flow");
    for (auto* s : {mp, solve, sweep, rank, sv, lim, sim}) add_common(s);
    for (auto* s : {solve, rank, sv}) {
        s->add_option("--eps", fl.eps, "interface parameter")->required();
        s->add_option("--r", fl.r, "mean value")->required();
    }
    sv->add_option("--n", fl.n, "number of transitions")->required();
    rank->add_option("--n", fl.n, "largest number of transitions");
    sim->add_option("--eps", fl.eps, "interface parameter");
    sim->add_option("--r", fl.r, "mean value");
    sim->add_option("--init", fl.init, "maxwell | step | spinodal | file");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = fl.config.empty() ? RunConfig{} : load_config(fl.config);
        if (fl.output_dir) cfg.output_dir = *fl.output_dir;
        if (sim->parsed()) {
            if (fl.eps) cfg.sim_eps = *fl.eps;
            if (fl.r) cfg.sim_r = *fl.r;
            if (fl.init) cfg.init = *fl.init;
        }
        if (rank->parsed() && fl.n) cfg.n_max = *fl.n;
        validate(cfg);
        for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";

        if (mp->parsed()) cmd_maxwell_point(cfg, std::cout);
        else if (solve->parsed()) cmd_solve(cfg, *fl.eps, *fl.r, std::cout);
        else if (sweep->parsed()) cmd_sweep(cfg, std::cout);
        else if (rank->parsed()) cmd_rank(cfg, *fl.eps, *fl.r, std::cout);
        else if (sv->parsed()) cmd_second_variation(cfg, *fl.eps, *fl.r, *fl.n, std::cout);
        else if (lim->parsed()) cmd_limit_check(cfg, std::cout);
        else if (sim->parsed()) cmd_simulate(cfg, cfg.init, std::cout);
    } catch (const mcgl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
