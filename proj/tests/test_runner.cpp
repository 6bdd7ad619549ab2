#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evoshift/errors.hpp"
#include "evoshift/runner.hpp"

using namespace evoshift;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_quadratic() {
    return json::parse(R"json({
      "model": {"kind": "quadratic", "r": 2.0,
                "g": {"expr": "1"}, "theta": {"expr": "sin(2*pi*t)"}},
      "scenario": {"mode": "eigen", "sigma": 0.04}
    })json");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
    const RunConfig cfg = load_config_json(minimal_quadratic());
    CHECK(cfg.R == 6.0);
    CHECK(cfg.n_points == 2049);
    CHECK(cfg.steps_per_period == 512);
    CHECK(cfg.scenarios.size() == 1);
    CHECK(cfg.scenarios[0].sigma == 0.04);
    CHECK(cfg.scenarios[0].c_tilde == 0.0);
}

TEST_CASE("validation lists every violated constraint at once") {
    json j = minimal_quadratic();
    j["model"].erase("r");
    j["grid"] = {{"R", -1.0}, {"n_points", 8}};
    try {
        load_config_json(j);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("model.r") != std::string::npos);
        CHECK(msg.find("grid.R") != std::string::npos);
        CHECK(msg.find("n_points") != std::string::npos);
    }
}

TEST_CASE("scenario expansion, scaling convention and mode constraints") {
    json j = minimal_quadratic();
    j["scenario"] = {{"mode", "eigen"}, {"epsilon", {0.2, 0.1, 0.05}}, {"c", 1.0}};
    const RunConfig cfg = load_config_json(j);
    CHECK(cfg.scenarios.size() == 3);
    CHECK(cfg.scenarios[0].sigma == doctest::Approx(0.04));
    CHECK(cfg.scenarios[0].c_tilde == doctest::Approx(0.2));
    CHECK(cfg.scenarios[2].sigma == doctest::Approx(0.0025));

    json bad = minimal_quadratic();
    bad["scenario"] = {{"mode", "moments"}, {"sigma", 0.01}};
    CHECK_THROWS_AS(load_config_json(bad), ValidationError);

    json both = minimal_quadratic();
    both["scenario"] = {{"mode", "eigen"}, {"sigma", 0.01}, {"epsilon", 0.1}};
    CHECK_THROWS_AS(load_config_json(both), ValidationError);

    json unknown = minimal_quadratic();
    unknown["scenario"]["mode"] = "explode";
    CHECK_THROWS_AS(load_config_json(unknown), ValidationError);

    json badexpr = minimal_quadratic();
    badexpr["model"]["g"] = {{"expr", "1+*2"}};
    badexpr["scenario"] = {{"mode", "eigen"}, {"sigma", 0.01}};
    const RunConfig cfg2 = load_config_json(badexpr);  // parse failure surfaces at build
    CHECK_THROWS_AS(build_model(cfg2), ValidationError);
}

TEST_CASE("tabulated models interpolate bilinearly") {
    json j;
    j["model"] = {{"kind", "tabulated"}, {"T", 1.0}};
    j["model"]["t_nodes"] = {0.0, 0.5, 1.0};
    j["model"]["x_nodes"] = {-1.0, 0.0, 1.0};
    j["model"]["values"] = {{0.0, 1.0, 0.0}, {-1.0, 0.5, -1.0}, {0.0, 1.0, 0.0}};
    j["scenario"] = {{"mode", "eigen"}, {"sigma", 0.01}};
    j["bracket"] = {-0.9, 0.9};
    const RunConfig cfg = load_config_json(j);
    const ModelBundle bundle = build_model(cfg);
    CHECK(bundle.model.rate(0.0, 0.0) == doctest::Approx(1.0));
    CHECK(bundle.model.rate(0.5, 0.0) == doctest::Approx(0.5));
    CHECK(bundle.model.rate(0.25, 0.0) == doctest::Approx(0.75));   // t interpolation
    CHECK(bundle.model.rate(0.0, 0.5) == doctest::Approx(0.5));     // x interpolation
    CHECK(bundle.model.rate(1.25, 0.0) == doctest::Approx(0.75));   // periodic wrap
    CHECK(bundle.model.rate(0.0, 5.0) == doctest::Approx(0.0));     // clamped in x
    CHECK(bundle.avg.x_m == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("run writes the contracted files and is byte-deterministic") {
    TempDir dir_a("evoshift_test_a"), dir_b("evoshift_test_b");
    json j = minimal_quadratic();
    j["grid"] = {{"R", 6.0}, {"n_points", 129}};
    j["solver"] = {{"steps_per_period", 64}, {"eigen_tol", 1e-9}};
    j["scenario"] = {{"mode", "eigen"}, {"sigma", 0.04}, {"c_tilde", 0.1}};

    j["output_dir"] = dir_a.path.string();
    const RunSummary sa = run(load_config_json(j), 1);
    REQUIRE(sa.all_ok());
    CHECK(fs::exists(dir_a.path / "eigenfunction.csv"));
    CHECK(fs::exists(dir_a.path / "qc_rhohat.csv"));
    CHECK(fs::exists(dir_a.path / "summary.json"));
    CHECK(fs::exists(dir_a.path / "config.echo"));

    const std::string head = slurp(dir_a.path / "eigenfunction.csv").substr(0, 9);
    CHECK(head == "x,p_c_t0\n");

    j["output_dir"] = dir_b.path.string();
    const RunSummary sb = run(load_config_json(j), 1);
    REQUIRE(sb.all_ok());
    CHECK(slurp(dir_a.path / "eigenfunction.csv") == slurp(dir_b.path / "eigenfunction.csv"));
    CHECK(slurp(dir_a.path / "qc_rhohat.csv") == slurp(dir_b.path / "qc_rhohat.csv"));

    // the echoed config reloads to the identical resolved configuration
    const RunConfig echoed = load_config(( dir_a.path / "config.echo").string());
    RunConfig original = load_config_json(j);
    original.resolved["output_dir"] = dir_a.path.string();
    CHECK(echoed.resolved == original.resolved);
}

TEST_CASE("simulate mode emits the rho timeseries with the contracted header") {
    TempDir dir("evoshift_test_sim");
    json j = minimal_quadratic();
    j["grid"] = {{"R", 6.0}, {"n_points", 129}};
    j["solver"] = {{"steps_per_period", 64}, {"max_periods", 60},
                   {"periodic_tolerance", 1e-6}, {"eigen_tol", 1e-9}};
    j["scenario"] = {{"mode", "simulate"}, {"epsilon", 0.25}, {"c", 0.4}};
    j["output_dir"] = dir.path.string();
    const RunSummary s = run(load_config_json(j), 1);
    REQUIRE(s.all_ok());
    const std::string csv = slurp(dir.path / "rho_timeseries.csv");
    CHECK(csv.substr(0, 14) == "t,rho,rho_hat\n");
    CHECK(s.scenarios[0].results.contains("verdict"));

    // sweeps fan out into per-scenario directories
    TempDir dir2("evoshift_test_sweep");
    j["scenario"] = {{"mode", "eigen"}, {"epsilon", {0.25, 0.2}}, {"c", 0.0}};
    j["output_dir"] = dir2.path.string();
    const RunSummary sweep = run(load_config_json(j), 2);
    REQUIRE(sweep.all_ok());
    CHECK(fs::exists(dir2.path / "s0" / "eigenfunction.csv"));
    CHECK(fs::exists(dir2.path / "s1" / "eigenfunction.csv"));
}

TEST_CASE("case-compare requires the second model") {
    json j = minimal_quadratic();
    j["scenario"] = {{"mode", "case-compare"}, {"epsilon", 0.1}, {"c", 1.0}};
    CHECK_THROWS_AS(load_config_json(j), ValidationError);
}

TEST_CASE("emit_results tolerates an empty summary") {
    TempDir dir("evoshift_test_empty");
    RunSummary empty;
    empty.config_echo = json::object();
    const auto manifest = emit_results(empty, dir.path.string());
    CHECK(manifest.size() == 2);  // config.echo + summary.json
    const json js = json::parse(slurp(dir.path / "summary.json"));
    CHECK(js["scenarios"].is_array());
    CHECK(js["scenarios"].empty());
}

TEST_CASE("parse errors carry position information") {
    TempDir dir("evoshift_test_parse");
    const fs::path bad = dir.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_config(bad.string()), ParseError);
    CHECK_THROWS_AS(load_config((dir.path / "missing.json").string()), IoError);
}
