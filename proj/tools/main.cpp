#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "serocontact/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"contact-based estimation of infectious disease transmission parameters"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    long jobs_override = 0;
    app.add_option("-c,--config", config_path, "configuration file")->required();
    auto* seed_opt = app.add_option("--seed", seed_override, "override the random seed");
    auto* jobs_opt = app.add_option("--jobs", jobs_override, "worker threads")
                         ->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out_override, "output directory");

    auto* fit_foi = app.add_subcommand(
        "fit-foi", "estimate a piecewise constant force of infection from serology");
    auto* smooth = app.add_subcommand(
        "smooth-contacts", "smooth the contact survey into per-capita contact rates");
    auto* fit_models = app.add_subcommand(
        "fit-models", "fit candidate transmission models and rank them");
    auto* bootstrap = app.add_subcommand(
        "bootstrap", "bootstrap confidence intervals for the full estimation chain");
    auto* simulate = app.add_subcommand(
        "simulate-serology", "draw synthetic serological datasets");
    for (auto* sub : {fit_foi, smooth, fit_models, bootstrap, simulate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        sero::Config cfg = sero::Config::load(config_path);
        sero::RunConfig rc = sero::RunConfig::from_config(cfg);
        if (seed_opt->count()) rc.seed = seed_override;
        if (jobs_opt->count()) rc.jobs = static_cast<std::size_t>(jobs_override);
        if (out_opt->count()) rc.out_dir = out_override;

        if (app.got_subcommand(fit_foi)) return sero::cmd_fit_foi(rc, std::cout);
        if (app.got_subcommand(smooth)) return sero::cmd_smooth_contacts(rc, std::cout);
        if (app.got_subcommand(fit_models)) return sero::cmd_fit_models(rc, std::cout);
        if (app.got_subcommand(bootstrap)) return sero::cmd_bootstrap(rc, std::cout);
        if (app.got_subcommand(simulate)) return sero::cmd_simulate_serology(rc, std::cout);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const sero::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sero::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sero::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
