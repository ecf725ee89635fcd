// Command line front end: list the canned experiments, dump their default
// configurations, and run them with optional overrides. Exit status is 0
// only when every verdict row passes, so the tool can gate CI jobs.
#include "CLI11.hpp"

#include "kspde/harness.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw kspde::ConfigError("cannot read config file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void print_record(const kspde::RunRecord& record) {
    std::printf("experiment %s  (hash %016llx, %.2fs, %d members)\n",
                record.config.experiment.c_str(), static_cast<unsigned long long>(record.hash),
                record.wall_seconds, record.config.members);
    for (const auto& row : record.verdicts) {
        std::printf("  %-28s %s  measured=%.6g bound=%.6g", row.name.c_str(),
                    row.pass ? "PASS" : "FAIL", row.measured, row.bound);
        if (row.stderr_est > 0.0) std::printf("  stderr=%.3g", row.stderr_est);
        std::printf("\n");
    }
    for (const auto& path : record.artifacts) std::printf("  wrote %s\n", path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kspde: stochastic conservation law laboratory"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list the canned experiments");

    std::string run_name;
    std::string config_path;
    std::string out_dir;
    int members = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    auto* run_cmd = app.add_subcommand("run", "run one experiment and print its verdicts");
    run_cmd->add_option("experiment", run_name, "experiment name (see: kspde list)")->required();
    run_cmd->add_option("--config", config_path, "json config file overriding the defaults");
    run_cmd->add_option("--out", out_dir, "directory for csv/json artifacts");
    run_cmd->add_option("--members", members, "ensemble member count override");
    run_cmd->add_option("--seed", seed, "base seed override")->each([&](const std::string&) {
        seed_set = true;
    });

    std::string show_name;
    auto* show_cmd = app.add_subcommand("show-config", "print an experiment's default config");
    show_cmd->add_option("experiment", show_name, "experiment name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list_cmd) {
            for (const auto& [name, doc] : kspde::list_experiments())
                std::printf("%-28s %s\n", name.c_str(), doc.c_str());
            return 0;
        }
        if (*show_cmd) {
            std::printf("%s\n", kspde::config_to_json(kspde::default_config(show_name)).c_str());
            return 0;
        }
        kspde::ExperimentConfig config = config_path.empty()
                                             ? kspde::default_config(run_name)
                                             : kspde::config_from_json(read_file(config_path));
        config.experiment = run_name;
        if (members > 0) config.members = members;
        if (seed_set) config.seed_base = seed;
        if (!out_dir.empty()) config.out_dir = out_dir;
        kspde::RunRecord record = kspde::run_experiment(config);
        print_record(record);
        return record.all_passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
