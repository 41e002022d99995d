// wesample: weighted-ensemble sampling from the command line.
//
//   wesample run --config configs/three_well.conf --out results --threads 8
//   wesample diagnose --reps 2000
//   wesample hill --set hill_horizon=300

#include "commands.hpp"
#include "config.hpp"

#include "we/csv.hpp"
#include "we/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> reps;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key = value configuration file");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--reps", flags.reps, "replicate count for every mode and check");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
    cmd->add_option("--set", flags.overrides, "override a config key (key=value)");
    cmd->add_flag("--print-config", flags.print_config, "print the resolved configuration first");
}

wesample::ExperimentConfig load(const CommonFlags& flags) {
    wesample::RawConfig raw;
    if (!flags.config_path.empty()) raw.merge_text(we::csv::read_file(flags.config_path), flags.config_path);
    for (const auto& o : flags.overrides) raw.apply_override(o);
    if (flags.seed) raw.set("seed", std::to_string(*flags.seed));
    if (flags.out) raw.set("out", *flags.out);
    if (flags.reps) raw.set("reps", std::to_string(*flags.reps));
    if (flags.threads) raw.set("threads", std::to_string(*flags.threads));
    return wesample::resolve(raw);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted-ensemble sampling for finite Markov chains"};
    app.require_subcommand(1);

    CommonFlags flags;
    using Command = std::function<int(const wesample::ExperimentConfig&, std::ostream&)>;
    Command chosen;
    const auto subcommand = [&](const char* name, const char* help, Command fn) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, flags);
        cmd->callback([&chosen, fn] { chosen = fn; });
    };
    subcommand("coarse", "build the coarse model (P, u, mu, v)", wesample::cmd_coarse);
    subcommand("run", "run every mode and horizon; write per-replicate and summary CSVs", wesample::cmd_run);
    subcommand("diagnose", "unbiasedness and Doob-identity checks", wesample::cmd_diagnose);
    subcommand("hill", "mean first-passage time / hitting probability via the Hill relation",
               wesample::cmd_hill);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wesample::kConfigError;
    }

    try {
        const auto config = load(flags);
        if (flags.print_config) std::cout << config.canonical << "threads=" << config.threads
                                          << "\nout=" << config.out << '\n';
        return chosen(config, std::cout);
    } catch (const wesample::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return wesample::kConfigError;
    } catch (const we::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return wesample::kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        // Module preconditions re-validate the config; a violation is a config error.
        std::cerr << "config error: " << e.what() << '\n';
        return wesample::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return wesample::kNumericalFailure;
    }
}
