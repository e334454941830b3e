#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "assure/commands.hpp"
#include "assure/errors.hpp"
#include "assure/version.hpp"

namespace {

struct Args {
    std::string config_path;
    assure::cli::CliOverrides overrides;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("assure-crt v") + assure::kVersion +
                 " - sample size via assurance for two-arm cluster RCTs"};
    app.require_subcommand(1);

    const char* names[] = {"power",     "assurance", "samplesize", "hybrid",
                           "posterior", "mc-study",  "sweep"};
    const char* descs[] = {
        "closed-form power sample sizes over a cluster range",
        "two-loop Monte Carlo assurance on a sample-size grid",
        "modal sample-size search via repeated assurance runs",
        "hybrid (power averaged over a design prior) sample sizes",
        "posterior study: all six variance priors on one simulated dataset",
        "assurance variability over an (L, K) grid",
        "design-prior sweep over the effect prior mean or sd"};

    Args args;
    std::uint64_t seed_val = 0;
    unsigned workers_val = 0;
    std::string out_val;
    bool seed_set = false, workers_set = false, out_set = false;

    for (int i = 0; i < 7; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("config", args.config_path, "run configuration file")->required();
        sub->add_option("--seed", seed_val, "override [run] seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--workers", workers_val, "override [run] workers (0 = auto)")
            ->each([&](const std::string&) { workers_set = true; });
        sub->add_option("--out", out_val, "override [run] out (CSV path; default stdout)")
            ->each([&](const std::string&) { out_set = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : assure::cli::kExitConfig;
    }

    if (seed_set) args.overrides.seed = seed_val;
    if (workers_set) args.overrides.workers = workers_val;
    if (out_set) args.overrides.out = out_val;

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        // resolve output target first so config errors never truncate a file
        const assure::IniConfig peek = assure::IniConfig::parse_file(args.config_path);
        std::string out_path =
            args.overrides.out ? *args.overrides.out : peek.get_string("run", "out", "");

        int rc;
        if (out_path.empty()) {
            rc = assure::cli::dispatch(command, args.config_path, args.overrides, std::cout);
        } else {
            std::ofstream out(out_path);
            if (!out) {
                std::cerr << "error: cannot open output file " << out_path << "\n";
                return assure::cli::kExitConfig;
            }
            rc = assure::cli::dispatch(command, args.config_path, args.overrides, out);
            std::cerr << "wrote " << out_path << "\n";
        }
        std::cerr << "seed=" << (args.overrides.seed ? *args.overrides.seed
                                                     : static_cast<std::uint64_t>(
                                                           peek.get_int("run", "seed", 1)))
                  << "\n";
        return rc;
    } catch (const assure::ConfigError& e) {
        std::cerr << "config error (" << args.config_path << "): " << e.what() << "\n";
        return assure::cli::kExitConfig;
    } catch (const assure::NotAchievableError& e) {
        std::cerr << "target not achievable: " << e.what() << "\n";
        return assure::cli::kExitNotAchievable;
    } catch (const assure::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return assure::cli::kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return assure::cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return assure::cli::kExitNumerical;
    }
}
