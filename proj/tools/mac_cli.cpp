// Command-line front end: run, compare, oracle, selftest.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mac/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

mac::RunConfig load(const std::string& path, const std::string& seed_override, const std::string& out) {
    auto cfg = mac::parse_config(path);
    if (!seed_override.empty()) cfg.seeds = mac::parse_seed_list(seed_override, "--seed-override");
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level Monte Carlo actor-critic experiments"};
    app.require_subcommand(1);

    std::string seed_override;
    std::string out;
    std::size_t jobs = 1;
    app.add_option("--seed-override", seed_override, "Comma-separated seeds replacing the config's list");
    app.add_option("--jobs", jobs, "Worker threads for seed-level parallelism")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory (overrides output_dir)");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Train every configured series and write CSV/SVG artifacts");
    run->add_option("config", config_path, "Config file")->required();

    std::string dir_a, dir_b;
    auto* compare = app.add_subcommand("compare", "Compare the summaries of two run directories");
    compare->add_option("dir_a", dir_a)->required();
    compare->add_option("dir_b", dir_b)->required();

    std::string oracle_path;
    auto* oracle = app.add_subcommand("oracle", "Exact quantities for the configured environment at theta_0");
    oracle->add_option("config", oracle_path, "Config file")->required();

    auto* selftest = app.add_subcommand("selftest", "Quick invariant checks on built-in fixtures");

    // Flags may also follow the subcommand.
    for (auto* sub : {run, compare, oracle, selftest}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run) {
            const auto cfg = load(config_path, seed_override, out);
            const auto result = mac::run_experiment(cfg, jobs);
            for (const auto& s : result.series) {
                for (std::size_t i = 0; i < s.records.size(); ++i) {
                    const auto& rec = s.records[i];
                    std::cout << s.name << " seed " << s.seeds[i] << ": iterations " << rec.final_state.iteration
                              << ", samples " << rec.final_state.samples_total << ", final mean reward "
                              << rec.final_mean_reward << ", eta clamps " << rec.final_state.eta_clamps << "\n";
                }
            }
            std::cout << "artifacts written to " << result.dir.string() << "\n";
        } else if (*compare) {
            const auto report = mac::compare_runs(dir_a, dir_b);
            report.print(std::cout);
            if (!out.empty()) {
                std::filesystem::create_directories(out);
                std::ofstream file(std::filesystem::path(out) / "comparison.csv");
                report.print(file);
            }
        } else if (*oracle) {
            const auto cfg = load(oracle_path, seed_override, out);
            mac::print_oracle_report(cfg, std::cout);
        } else if (*selftest) {
            return mac::run_selftest(std::cout) ? kOk : kRuntime;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
