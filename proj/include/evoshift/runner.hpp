#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoshift/model.hpp"

namespace evoshift {

enum class RunMode {
    Simulate,
    Eigen,
    CriticalSpeed,
    HjProfile,
    ExpansionSweep,
    Moments,
    CaseCompare,
};

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

// One (sigma, c_tilde) work item; epsilon/c carry the scaling convention of
// the config when present (sigma = eps^2, c_tilde = c eps).
struct ScenarioSpec {
    double sigma = 0.0;
    double c_tilde = 0.0;
    std::optional<double> epsilon;
    std::optional<double> c;
};

struct RunConfig {
    nlohmann::json resolved;  // defaults filled in; echoed verbatim
    RunMode mode = RunMode::Simulate;
    std::vector<ScenarioSpec> scenarios;
    // grid
    double R = 6.0;
    std::size_t n_points = 2049;
    // solver
    std::size_t steps_per_period = 512;
    std::size_t max_periods = 512;
    double extinction_threshold = 1e-8;
    double periodic_tolerance = 1e-8;
    double eigen_tol = 1e-10;
    std::size_t eigen_max_iters = 5000;
    // model bracket and tail constants
    double bracket_lo = -6.0;
    double bracket_hi = 6.0;
    double tail_delta = 0.05;
    double tail_R0 = 3.0;
    // outputs
    std::string output_dir = "out";
    unsigned seed = 0;
    double initial_perturbation = 0.0;
};

struct ScenarioOutcome {
    std::size_t index = 0;
    bool ok = true;
    std::string error;
    nlohmann::json results;
    std::vector<std::string> files;
    double wall_ms = 0.0;
};

struct RunSummary {
    nlohmann::json config_echo;
    std::vector<ScenarioOutcome> scenarios;
    bool all_ok() const {
        for (const auto& s : scenarios)
            if (!s.ok) return false;
        return true;
    }
};

// Parses and validates a configuration file. ParseError carries the JSON
// parser position; ValidationError lists every violated constraint at once.
RunConfig load_config(const std::string& path);
RunConfig load_config_json(const nlohmann::json& j);

// Executes the scenario graph; per-scenario failures are recorded and the
// sweep continues. jobs > 1 runs scenarios concurrently.
RunSummary run(const RunConfig& config, unsigned jobs = 1);

// Writes summary.json, per-scenario CSVs were already written by run();
// verifies the manifest and writes config.echo. Returns the manifest.
std::vector<std::string> emit_results(const RunSummary& summary, const std::string& out_dir);

// Builds the growth-rate model declared in the config, its averaged rate
// (exact closed form for the quadratic family) and optional quadratic params.
struct ModelBundle {
    GrowthRateModel model;
    AveragedRate avg;
    std::optional<QuadraticRateParams> quadratic;
};
ModelBundle build_model(const RunConfig& config);

}  // namespace evoshift
