#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evoshift/acceptance.hpp"
#include "evoshift/errors.hpp"
#include "evoshift/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"evoshift: periodic-environment selection-mutation laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode_override;
    unsigned jobs = 1;
    CLI::App* run_cmd = app.add_subcommand("run", "execute the scenarios of a configuration");
    run_cmd->add_option("config", config_path, "configuration file (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    run_cmd->add_option("--jobs", jobs, "concurrent scenarios")->default_val(1);
    run_cmd->add_option("--mode", mode_override, "override scenario.mode");

    CLI::App* check_cmd =
        app.add_subcommand("check", "run the built-in acceptance suite and print a table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check_cmd) {
            const int failures = evoshift::run_acceptance(std::cout);
            return failures == 0 ? 0 : 1;
        }
        if (*run_cmd) {
            nlohmann::json j;
            {
                std::ifstream in(config_path);
                if (!in) throw evoshift::IoError("cannot open config '" + config_path + "'");
                try {
                    j = nlohmann::json::parse(in);
                } catch (const nlohmann::json::parse_error& e) {
                    throw evoshift::ParseError(std::string("config: ") + e.what());
                }
            }
            if (!out_dir.empty()) j["output_dir"] = out_dir;
            if (!mode_override.empty()) j["scenario"]["mode"] = mode_override;
            const evoshift::RunConfig config = evoshift::load_config_json(j);
            const evoshift::RunSummary summary = evoshift::run(config, jobs);
            std::size_t ok = 0;
            for (const auto& s : summary.scenarios)
                if (s.ok) ++ok;
            std::printf("%zu/%zu scenarios succeeded; summary at %s/summary.json\n", ok,
                        summary.scenarios.size(), config.output_dir.c_str());
            return summary.all_ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
