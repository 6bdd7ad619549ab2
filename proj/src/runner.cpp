#include "evoshift/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "evoshift/asymptotics.hpp"
#include "evoshift/errors.hpp"
#include "evoshift/expr.hpp"
#include "evoshift/floquet.hpp"
#include "evoshift/pde.hpp"
#include "evoshift/quadrature.hpp"

namespace evoshift {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// logging

namespace {

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("EVOSHIFT_LOG");
        if (!env) return 1;
        const std::string s(env);
        if (s == "error") return 0;
        if (s == "debug") return 2;
        return 1;  // info
    }();
    return level;
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

void log_line(int level, const std::string& msg) {
    if (level > log_level()) return;
    std::lock_guard<std::mutex> lock(log_mutex());
    std::fprintf(stderr, "[evoshift] %s\n", msg.c_str());
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// config

RunMode parse_mode(const std::string& name) {
    if (name == "simulate") return RunMode::Simulate;
    if (name == "eigen") return RunMode::Eigen;
    if (name == "critical-speed") return RunMode::CriticalSpeed;
    if (name == "hj-profile") return RunMode::HjProfile;
    if (name == "expansion-sweep") return RunMode::ExpansionSweep;
    if (name == "moments") return RunMode::Moments;
    if (name == "case-compare") return RunMode::CaseCompare;
    throw ValidationError("unknown mode '" + name + "'");
}

std::string mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Simulate: return "simulate";
        case RunMode::Eigen: return "eigen";
        case RunMode::CriticalSpeed: return "critical-speed";
        case RunMode::HjProfile: return "hj-profile";
        case RunMode::ExpansionSweep: return "expansion-sweep";
        case RunMode::Moments: return "moments";
        case RunMode::CaseCompare: return "case-compare";
    }
    return "?";
}

namespace {

std::vector<double> as_list(const json& j) {
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<double>());
    }
    return out;
}

// Time function from a scalar, {"expr": "..."} or {"samples": [...]}.
TimeFn time_function(const json& j, double T, const std::string& field,
                     std::vector<std::string>& issues) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double) { return v; };
    }
    if (j.is_object() && j.contains("expr")) {
        try {
            return expr::compile(j.at("expr").get<std::string>());
        } catch (const ParseError& e) {
            issues.push_back(field + ": " + e.what());
            return {};
        }
    }
    if (j.is_object() && j.contains("samples")) {
        const std::vector<double> samples = as_list(j.at("samples"));
        if (samples.size() < 2) {
            issues.push_back(field + ".samples needs at least 2 entries");
            return {};
        }
        // Samples at k T / N, k = 0..N-1, periodic linear interpolation.
        const std::size_t N = samples.size();
        return [samples, N, T](double t) {
            double s = std::fmod(t / T, 1.0);
            if (s < 0.0) s += 1.0;
            const double pos = s * static_cast<double>(N);
            const std::size_t k = std::min(static_cast<std::size_t>(pos), N - 1);
            const double w = pos - static_cast<double>(k);
            return (1.0 - w) * samples[k] + w * samples[(k + 1) % N];
        };
    }
    issues.push_back(field + " must be a number, {\"expr\": ...} or {\"samples\": [...]}");
    return {};
}

void validate_model_spec(const json& model, const std::string& where,
                         std::vector<std::string>& issues) {
    if (!model.is_object()) {
        issues.push_back(where + " must be a table");
        return;
    }
    const std::string kind = model.value("kind", "");
    if (kind == "quadratic") {
        if (!model.contains("r")) issues.push_back(where + ".r is required for kind=quadratic");
        if (!model.contains("g")) issues.push_back(where + ".g is required for kind=quadratic");
        if (!model.contains("theta"))
            issues.push_back(where + ".theta is required for kind=quadratic");
    } else if (kind == "tabulated") {
        for (const char* f : {"t_nodes", "x_nodes", "values"})
            if (!model.contains(f))
                issues.push_back(where + "." + f + " is required for kind=tabulated");
    } else {
        issues.push_back(where + ".kind must be \"quadratic\" or \"tabulated\"");
    }
}

}  // namespace

RunConfig load_config_json(const json& input) {
    std::vector<std::string> issues;
    json j = input;

    if (!j.is_object()) throw ValidationError("config root must be a table");
    if (!j.contains("model")) issues.push_back("model is required");
    if (j.contains("model")) validate_model_spec(j["model"], "model", issues);
    if (j.contains("model") && j["model"].is_object() && !j["model"].contains("T"))
        j["model"]["T"] = 1.0;
    if (j.contains("model_constant")) validate_model_spec(j["model_constant"], "model_constant", issues);
    if (j.contains("model_constant") && j["model_constant"].is_object() &&
        !j["model_constant"].contains("T"))
        j["model_constant"]["T"] = 1.0;

    json& grid = j["grid"];
    if (!grid.is_object()) grid = json::object();
    if (!grid.contains("R")) grid["R"] = 6.0;
    if (!grid.contains("n_points")) grid["n_points"] = 2049;

    json& solver = j["solver"];
    if (!solver.is_object()) solver = json::object();
    if (!solver.contains("steps_per_period")) solver["steps_per_period"] = 512;
    if (!solver.contains("max_periods")) solver["max_periods"] = 512;
    if (!solver.contains("extinction_threshold")) solver["extinction_threshold"] = 1e-8;
    if (!solver.contains("periodic_tolerance")) solver["periodic_tolerance"] = 1e-8;
    if (!solver.contains("eigen_tol")) solver["eigen_tol"] = 1e-10;
    if (!solver.contains("eigen_max_iters")) solver["eigen_max_iters"] = 5000;

    if (!j.contains("scenario") || !j["scenario"].is_object())
        issues.push_back("scenario table with a mode is required");

    RunConfig cfg;
    if (j.contains("scenario") && j["scenario"].is_object()) {
        json& sc = j["scenario"];
        if (!sc.contains("mode")) {
            issues.push_back("scenario.mode is required");
        } else {
            try {
                cfg.mode = parse_mode(sc["mode"].get<std::string>());
            } catch (const ValidationError& e) {
                issues.push_back(e.what());
            }
        }
        const bool scaled = sc.contains("epsilon");
        const bool raw = sc.contains("sigma");
        if (scaled && raw) issues.push_back("scenario: give either epsilon or sigma, not both");
        if (!scaled && !raw) issues.push_back("scenario: epsilon (with c) or sigma is required");
        if (scaled) {
            const std::vector<double> eps = as_list(sc["epsilon"]);
            std::vector<double> cs = sc.contains("c") ? as_list(sc["c"]) : std::vector<double>{0.0};
            if (eps.empty()) issues.push_back("scenario.epsilon must be a number or list");
            for (const double e : eps) {
                if (!(e > 0.0)) issues.push_back("scenario.epsilon entries must be positive");
                for (const double c : cs) {
                    ScenarioSpec s;
                    s.epsilon = e;
                    s.c = c;
                    s.sigma = e * e;  // the scaling convention lives here only
                    s.c_tilde = c * e;
                    cfg.scenarios.push_back(s);
                }
            }
        } else if (raw) {
            const std::vector<double> sigmas = as_list(sc["sigma"]);
            std::vector<double> cts =
                sc.contains("c_tilde") ? as_list(sc["c_tilde"]) : std::vector<double>{0.0};
            for (const double sg : sigmas) {
                if (!(sg > 0.0)) issues.push_back("scenario.sigma entries must be positive");
                for (const double ct : cts) {
                    ScenarioSpec s;
                    s.sigma = sg;
                    s.c_tilde = ct;
                    cfg.scenarios.push_back(s);
                }
            }
        }
        const bool needs_scaled = cfg.mode == RunMode::HjProfile ||
                                  cfg.mode == RunMode::ExpansionSweep ||
                                  cfg.mode == RunMode::Moments ||
                                  cfg.mode == RunMode::CaseCompare;
        if (needs_scaled && !scaled)
            issues.push_back("mode " + mode_name(cfg.mode) + " requires the epsilon/c scaling");
        if (cfg.mode == RunMode::CaseCompare && !j.contains("model_constant"))
            issues.push_back("mode case-compare requires a model_constant table");
    }

    cfg.R = grid["R"].get<double>();
    cfg.n_points = grid["n_points"].get<std::size_t>();
    if (!(cfg.R > 0.0)) issues.push_back("grid.R must be positive");
    if (cfg.n_points < 64) issues.push_back("grid.n_points must be >= 64");

    cfg.steps_per_period = solver["steps_per_period"].get<std::size_t>();
    cfg.max_periods = solver["max_periods"].get<std::size_t>();
    cfg.extinction_threshold = solver["extinction_threshold"].get<double>();
    cfg.periodic_tolerance = solver["periodic_tolerance"].get<double>();
    cfg.eigen_tol = solver["eigen_tol"].get<double>();
    cfg.eigen_max_iters = solver["eigen_max_iters"].get<std::size_t>();
    if (cfg.steps_per_period < 64) issues.push_back("solver.steps_per_period must be >= 64");
    if (!(cfg.extinction_threshold > 0.0))
        issues.push_back("solver.extinction_threshold must be positive");
    if (!(cfg.periodic_tolerance > 0.0))
        issues.push_back("solver.periodic_tolerance must be positive");
    if (!(cfg.eigen_tol > 0.0)) issues.push_back("solver.eigen_tol must be positive");

    if (!j.contains("bracket")) j["bracket"] = json::array({-cfg.R, cfg.R});
    cfg.bracket_lo = j["bracket"][0].get<double>();
    cfg.bracket_hi = j["bracket"][1].get<double>();
    if (!(cfg.bracket_lo < cfg.bracket_hi)) issues.push_back("bracket must satisfy lo < hi");

    json& tail = j["tail"];
    if (!tail.is_object()) tail = json::object();
    if (!tail.contains("delta")) tail["delta"] = 0.05;
    if (!tail.contains("R0")) tail["R0"] = 0.5 * cfg.R;
    cfg.tail_delta = tail["delta"].get<double>();
    cfg.tail_R0 = tail["R0"].get<double>();

    if (!j.contains("output_dir")) j["output_dir"] = "out";
    cfg.output_dir = j["output_dir"].get<std::string>();
    if (!j.contains("seed")) j["seed"] = 0;
    cfg.seed = j["seed"].get<unsigned>();
    if (!j.contains("initial_perturbation")) j["initial_perturbation"] = 0.0;
    cfg.initial_perturbation = j["initial_perturbation"].get<double>();

    if (!issues.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& s : issues) msg += "\n  - " + s;
        throw ValidationError(msg);
    }
    cfg.resolved = j;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config '" + path + "': " + e.what());
    }
    return load_config_json(j);
}

// ---------------------------------------------------------------------------
// model construction

namespace {

ModelBundle build_model_from_spec(const json& spec, const RunConfig& cfg) {
    ModelBundle bundle;
    std::vector<std::string> issues;
    const std::string kind = spec.at("kind").get<std::string>();
    const double T = spec.at("T").get<double>();
    if (kind == "quadratic") {
        QuadraticRateParams params;
        params.r = spec.at("r").get<double>();
        params.period_T = T;
        params.g = time_function(spec.at("g"), T, "model.g", issues);
        params.theta = time_function(spec.at("theta"), T, "model.theta", issues);
        if (!issues.empty()) throw ValidationError(issues.front());
        bundle.model = quadratic_model(params);
        bundle.avg = quadratic_average(params);
        bundle.quadratic = params;
    } else {
        const std::vector<double> t_nodes = as_list(spec.at("t_nodes"));
        const std::vector<double> x_nodes = as_list(spec.at("x_nodes"));
        std::vector<std::vector<double>> values;
        for (const auto& row : spec.at("values")) values.push_back(as_list(row));
        if (t_nodes.size() < 2 || x_nodes.size() < 2 || values.size() != t_nodes.size())
            throw ValidationError("tabulated model needs t_nodes/x_nodes/values of consistent shape");
        for (const auto& row : values)
            if (row.size() != x_nodes.size())
                throw ValidationError("tabulated model: ragged values row");

        GrowthRateModel m;
        m.period_T = T;
        m.rate = [t_nodes, x_nodes, values, T](double t, double x) {
            double s = std::fmod(t, T);
            if (s < 0.0) s += T;
            // Bilinear interpolation, periodic in t, clamped in x.
            std::size_t it = 0;
            while (it + 2 < t_nodes.size() && t_nodes[it + 1] <= s) ++it;
            const double t0 = t_nodes[it], t1 = t_nodes[it + 1];
            const double wt = (s - t0) / (t1 - t0);
            const double xc = std::clamp(x, x_nodes.front(), x_nodes.back());
            std::size_t ix = 0;
            while (ix + 2 < x_nodes.size() && x_nodes[ix + 1] <= xc) ++ix;
            const double x0 = x_nodes[ix], x1 = x_nodes[ix + 1];
            const double wx = (xc - x0) / (x1 - x0);
            const double v0 = (1.0 - wx) * values[it][ix] + wx * values[it][ix + 1];
            const double v1 = (1.0 - wx) * values[it + 1][ix] + wx * values[it + 1][ix + 1];
            return (1.0 - wt) * v0 + wt * v1;
        };
        bundle.model = m;
        bundle.avg = averaged_rate(bundle.model, 256, cfg.bracket_lo, cfg.bracket_hi);
    }
    bundle.model.sup_bound_d0 = measured_sup_bound(bundle.model, -cfg.R, cfg.R);
    return bundle;
}

}  // namespace

ModelBundle build_model(const RunConfig& config) {
    return build_model_from_spec(config.resolved.at("model"), config);
}

// ---------------------------------------------------------------------------
// scenario execution

namespace {

struct CsvWriter {
    std::ofstream out;
    explicit CsvWriter(const fs::path& path) : out(path) {
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    }
    void header(const std::string& names) { out << names << "\n"; }
    void row(std::initializer_list<double> vals) {
        bool first = true;
        for (const double v : vals) {
            if (!first) out << ",";
            out << fmt_double(v);
            first = false;
        }
        out << "\n";
    }
};

PdeState initial_state(const RunConfig& cfg, const ModelBundle& bundle, const Grid1D& grid,
                       double sigma) {
    // Gaussian at x_m with standard deviation sqrt(eps), unit mass (H4).
    const double eps = std::sqrt(sigma);
    const double sd = std::sqrt(eps);
    std::vector<double> n(grid.n_points, 0.0);
    for (std::size_t i = 1; i + 1 < grid.n_points; ++i) {
        const double d = (grid.nodes[i] - bundle.avg.x_m) / sd;
        n[i] = std::exp(-0.5 * d * d);
    }
    if (cfg.initial_perturbation > 0.0) {
        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> amp(-cfg.initial_perturbation,
                                                   cfg.initial_perturbation);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        for (int k = 1; k <= 4; ++k) {
            const double a = amp(rng), ph = phase(rng);
            for (std::size_t i = 1; i + 1 < grid.n_points; ++i)
                n[i] *= std::max(0.1, 1.0 + a * std::sin(k * M_PI * (grid.nodes[i] + grid.R) /
                                                             grid.R +
                                                         ph));
        }
    }
    PdeState s = PdeState::make(0.0, std::move(n), grid);
    for (double& v : s.density) v /= s.mass_rho;
    s.mass_rho = 1.0;
    return s;
}

SolverConfig solver_config(const RunConfig& cfg, double T) {
    SolverConfig sc;
    sc.steps_per_period = cfg.steps_per_period;
    sc.dt = T / static_cast<double>(cfg.steps_per_period);
    sc.max_periods = cfg.max_periods;
    sc.extinction_threshold = cfg.extinction_threshold;
    sc.periodic_tolerance = cfg.periodic_tolerance;
    return sc;
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Extinct: return "Extinct";
        case Verdict::Periodic: return "Periodic";
        case Verdict::Undecided: return "Undecided";
    }
    return "?";
}

void run_scenario(const RunConfig& cfg, const ModelBundle& bundle,
                  const std::optional<ModelBundle>& bundle_constant, const Grid1D& grid,
                  const ScenarioSpec& spec, const fs::path& dir, ScenarioOutcome& out) {
    const double sigma = spec.sigma, c_tilde = spec.c_tilde;
    const GrowthRateModel& model = bundle.model;
    json& res = out.results;
    res["sigma"] = sigma;
    res["c_tilde"] = c_tilde;
    if (spec.epsilon) res["epsilon"] = *spec.epsilon;
    if (spec.c) res["c"] = *spec.c;

    const auto add_file = [&](const fs::path& p) { out.files.push_back(p.string()); };

    const auto eigen_solve = [&](double ct) {
        return principal_eigenpair(model, sigma, ct, grid, cfg.steps_per_period, cfg.eigen_tol,
                                   cfg.eigen_max_iters);
    };

    switch (cfg.mode) {
        case RunMode::Simulate: {
            const FloquetEigenpair eig = eigen_solve(c_tilde);
            res["lambda"] = eig.lambda;
            res["eigen_iterations"] = eig.iterations;
            PeriodicTable rho_hat;
            bool viable = false;
            try {
                const PeriodicQuantities pq = periodic_quantities(eig, model, grid);
                rho_hat = pq.rho_hat;
                viable = true;
            } catch (const NonviablePopulation&) {
                viable = false;
            }
            res["viable"] = viable;

            const Trajectory traj = simulate(initial_state(cfg, bundle, grid, sigma), model,
                                             sigma, c_tilde, grid, solver_config(cfg, model.period_T));
            res["verdict"] = verdict_name(traj.verdict);
            res["periods_run"] = traj.periods_run;
            res["final_mass"] = traj.rho.back();

            CsvWriter csv(dir / "rho_timeseries.csv");
            csv.header("t,rho,rho_hat");
            for (std::size_t i = 0; i < traj.times.size(); ++i)
                csv.row({traj.times[i], traj.rho[i],
                         viable ? rho_hat(traj.times[i]) : 0.0});
            add_file(dir / "rho_timeseries.csv");

            const std::size_t nsnap = traj.period_snapshots.size();
            const std::size_t want = std::min<std::size_t>(8, nsnap);
            for (std::size_t s = 0; s < want; ++s) {
                const std::size_t idx = want == 1 ? 0 : s * (nsnap - 1) / (want - 1);
                const PdeState& st = traj.period_snapshots[idx];
                char name[64];
                std::snprintf(name, sizeof(name), "snapshot_p%05zu.csv", idx);
                CsvWriter snap(dir / name);
                snap.header("x,n");
                for (std::size_t i = 0; i < grid.n_points; ++i)
                    snap.row({grid.nodes[i], st.density[i]});
                add_file(dir / name);
            }
            break;
        }
        case RunMode::Eigen: {
            const FloquetEigenpair eig = eigen_solve(c_tilde);
            res["lambda"] = eig.lambda;
            res["growth_factor"] = eig.growth_factor;
            res["eigen_iterations"] = eig.iterations;
            res["residual"] = eig.residual;
            res["used_liouville"] = eig.used_liouville;

            TailHypothesis tail{cfg.tail_delta, cfg.tail_R0};
            const HypothesisReport hyp =
                check_hypotheses(model, bundle.avg, eig.lambda, tail, -cfg.R, cfg.R);
            res["hypotheses_pass"] = hyp.all_pass();
            res["hc_margin"] = hyp.hc_tail.margin;
            const TailDecayReport decay = decay_tail_check(eig, tail, sigma, c_tilde, grid);
            res["tail_nu"] = decay.nu;
            res["tail_slope_left"] = decay.slope_left;
            res["tail_slope_right"] = decay.slope_right;
            res["tail_pass"] = decay.pass;

            CsvWriter efn(dir / "eigenfunction.csv");
            efn.header("x,p_c_t0");
            for (std::size_t i = 0; i < grid.n_points; ++i)
                efn.row({grid.nodes[i], eig.eigenfunction.front()[i]});
            add_file(dir / "eigenfunction.csv");

            try {
                const PeriodicQuantities pq = periodic_quantities(eig, model, grid);
                res["int_Qc"] = pq.int_Qc;
                CsvWriter qc(dir / "qc_rhohat.csv");
                qc.header("t,Qc,rho_hat");
                for (std::size_t k = 0; k < pq.Qc.times.size(); ++k)
                    qc.row({pq.Qc.times[k], pq.Qc.values[k], pq.rho_hat.values[k]});
                add_file(dir / "qc_rhohat.csv");
            } catch (const NonviablePopulation& e) {
                res["int_Qc"] = 0.0;
                res["nonviable"] = std::string(e.what());
            }
            break;
        }
        case RunMode::CriticalSpeed: {
            const double cstar_sigma = critical_speed(model, sigma, grid, cfg.steps_per_period,
                                                      cfg.eigen_tol, cfg.eigen_max_iters);
            res["c_tilde_star"] = cstar_sigma;
            if (spec.epsilon) {
                const double eps = *spec.epsilon;
                res["c_star"] = cstar_sigma / eps;
                const AsymptoticReport rep = expansion_report(bundle.avg, spec.c.value_or(0.0),
                                                              {eps});
                res["c_star_predicted"] = rep.entries.front().cstar_predicted;
                res["c_star_gap"] =
                    std::abs(cstar_sigma / eps - rep.entries.front().cstar_predicted);
            }
            break;
        }
        case RunMode::HjProfile: {
            const double c = *spec.c, eps = *spec.epsilon;
            const double x_bar = solve_xbar(bundle.avg, c);
            const HJProfile prof = explicit_psi(bundle.avg, x_bar, c, cfg.tail_delta);
            res["x_m"] = bundle.avg.x_m;
            res["x_bar"] = x_bar;
            res["rho_bar"] = prof.rho_bar;
            res["lambda2"] = std::sqrt(-bundle.avg.abar_dxx_at_xm / 2.0);

            // Residual of the Hamilton-Jacobi equation with branch derivatives.
            double hj_res = 0.0;
            for (std::size_t i = 0; i < grid.n_points; ++i) {
                const double x = grid.nodes[i];
                if (std::abs(x - bundle.avg.x_m) < 1e-3) continue;
                const double f = bundle.avg.abar_max - bundle.avg.abar(x);
                const double px = x < bundle.avg.x_m ? -0.5 * c + std::sqrt(std::max(0.0, f))
                                                     : -0.5 * c - std::sqrt(std::max(0.0, f));
                const double r = -(px + 0.5 * c) * (px + 0.5 * c) -
                                 (bundle.avg.abar(x) - prof.rho_bar - 0.25 * c * c);
                hj_res = std::max(hj_res, std::abs(r));
            }
            res["hj_residual"] = hj_res;

            const Trajectory traj = simulate(initial_state(cfg, bundle, grid, sigma), model,
                                             sigma, c_tilde, grid, solver_config(cfg, model.period_T));
            res["verdict"] = verdict_name(traj.verdict);
            std::vector<double> psi_eps;
            if (traj.verdict == Verdict::Periodic)
                psi_eps = hopf_cole(traj.cycle.front(), eps);

            CsvWriter csv(dir / "psi_profile.csv");
            csv.header("x,psi,psi_eps");
            for (std::size_t i = 0; i < grid.n_points; ++i)
                csv.row({grid.nodes[i], prof.psi(grid.nodes[i]),
                         psi_eps.empty() ? 0.0 : psi_eps[i]});
            add_file(dir / "psi_profile.csv");
            break;
        }
        case RunMode::ExpansionSweep: {
            const double c = *spec.c, eps = *spec.epsilon;
            const AsymptoticReport rep = expansion_report(bundle.avg, c, {eps});
            const FloquetEigenpair eig = eigen_solve(c_tilde);
            const double cstar_sigma = critical_speed(model, sigma, grid, cfg.steps_per_period,
                                                      cfg.eigen_tol, cfg.eigen_max_iters);
            const double rho_solver = -eig.lambda;
            const double rho_pred = rep.entries.front().rho_bar_predicted;
            res["rho_bar_solver"] = rho_solver;
            res["rho_bar_predicted"] = rho_pred;
            res["rho_residual"] = std::abs(rho_solver - rho_pred);
            res["c_star_solver"] = cstar_sigma / eps;
            res["c_star_predicted"] = rep.entries.front().cstar_predicted;
            res["lambda2"] = rep.lambda2;

            CsvWriter csv(dir / "expansion.csv");
            csv.header("epsilon,rho_bar_solver,rho_bar_predicted,rho_residual,c_star_solver,c_star_predicted");
            csv.row({eps, rho_solver, rho_pred, std::abs(rho_solver - rho_pred),
                     cstar_sigma / eps, rep.entries.front().cstar_predicted});
            add_file(dir / "expansion.csv");
            break;
        }
        case RunMode::Moments: {
            const double c = *spec.c, eps = *spec.epsilon;
            const double x_bar = solve_xbar(bundle.avg, c);
            const HJProfile prof = explicit_psi(bundle.avg, x_bar, c, cfg.tail_delta);
            const CorrectorData corr = corrector(model, bundle.avg, prof);
            const TaylorCoefficients taylor = taylor_coefficients(prof);
            const Trajectory traj = simulate(initial_state(cfg, bundle, grid, sigma), model,
                                             sigma, c_tilde, grid, solver_config(cfg, model.period_T));
            res["verdict"] = verdict_name(traj.verdict);
            if (traj.verdict != Verdict::Periodic)
                throw NonviablePopulation("moments: trajectory did not reach the periodic regime");
            const MomentReport rep = measure_moments(traj, grid, eps, x_bar, corr, taylor);
            res["x_bar"] = x_bar;
            res["taylor_A"] = taylor.A;
            res["taylor_B"] = taylor.B;
            res["taylor_C"] = taylor.C;
            res["lambda2"] = corr.lambda2;
            res["K"] = corr.K;
            res["mu_mean_measured"] = rep.mu_mean_measured;
            res["mu_mean_predicted"] = rep.mu_mean_predicted;
            res["mu_max_gap"] = rep.mu_max_gap;
            res["var_predicted"] = rep.var_predicted;
            res["var_max_gap"] = rep.var_max_gap;

            CsvWriter csv(dir / "moments.csv");
            csv.header("t,D,mu_measured,mu_predicted,var_measured,var_predicted");
            for (std::size_t k = 0; k < rep.mu_measured.times.size(); ++k) {
                const double t = rep.mu_measured.times[k];
                csv.row({t, corr.D(t), rep.mu_measured.values[k], rep.mu_predicted.values[k],
                         rep.var_measured.values[k], rep.var_predicted});
            }
            add_file(dir / "moments.csv");
            break;
        }
        case RunMode::CaseCompare: {
            const double c = *spec.c, eps = *spec.epsilon;
            CaseSolverOptions opts;
            opts.grid = grid;
            opts.steps_per_period = cfg.steps_per_period;
            opts.tol = cfg.eigen_tol;
            opts.max_iters = cfg.eigen_max_iters;
            const CaseComparison cmp =
                case_comparison(*bundle.quadratic, *bundle_constant->quadratic, c, eps, &opts);
            res["rho_bar_formula_periodic"] = cmp.periodic.rho_bar_formula;
            res["rho_bar_formula_constant"] = cmp.constant.rho_bar_formula;
            res["cstar_formula_periodic"] = cmp.periodic.cstar_formula;
            res["cstar_formula_constant"] = cmp.constant.cstar_formula;
            res["mu_mean_formula_periodic"] = cmp.periodic.mu_mean_formula;
            res["mu_mean_formula_constant"] = cmp.constant.mu_mean_formula;
            res["rho_bar_solver_periodic"] = cmp.periodic.rho_bar_solver;
            res["rho_bar_solver_constant"] = cmp.constant.rho_bar_solver;
            res["cstar_solver_periodic"] = cmp.periodic.cstar_solver;
            res["cstar_solver_constant"] = cmp.constant.cstar_solver;
            res["rho_gap_formula"] = cmp.rho_gap_formula;
            res["cstar_gap_formula"] = cmp.cstar_gap_formula;
            res["rho_gap_solver"] = cmp.rho_gap_solver;
            res["cstar_gap_solver"] = cmp.cstar_gap_solver;

            CsvWriter csv(dir / "case_compare.csv");
            csv.header("scenario,rho_bar_formula,cstar_formula,mu_mean_formula,rho_bar_solver,cstar_solver");
            csv.out << "periodic";
            for (const double v :
                 {cmp.periodic.rho_bar_formula, cmp.periodic.cstar_formula,
                  cmp.periodic.mu_mean_formula, cmp.periodic.rho_bar_solver,
                  cmp.periodic.cstar_solver})
                csv.out << "," << fmt_double(v);
            csv.out << "\nconstant";
            for (const double v :
                 {cmp.constant.rho_bar_formula, cmp.constant.cstar_formula,
                  cmp.constant.mu_mean_formula, cmp.constant.rho_bar_solver,
                  cmp.constant.cstar_solver})
                csv.out << "," << fmt_double(v);
            csv.out << "\n";
            add_file(dir / "case_compare.csv");
            break;
        }
    }
}

}  // namespace

RunSummary run(const RunConfig& config, unsigned jobs) {
    RunSummary summary;
    summary.config_echo = config.resolved;

    const fs::path out_root(config.output_dir);
    fs::create_directories(out_root);

    log_line(1, "building model and grid");
    const ModelBundle bundle = build_model(config);
    std::optional<ModelBundle> bundle_constant;
    if (config.resolved.contains("model_constant")) {
        RunConfig c2 = config;
        bundle_constant = build_model_from_spec(config.resolved.at("model_constant"), c2);
    }
    const Grid1D grid = build_grid(config.R, config.n_points);

    const std::size_t n = config.scenarios.size();
    summary.scenarios.resize(n);
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            ScenarioOutcome& out = summary.scenarios[i];
            out.index = i;
            const fs::path dir = n == 1 ? out_root : out_root / ("s" + std::to_string(i));
            fs::create_directories(dir);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                log_line(1, "scenario " + std::to_string(i) + " (" + mode_name(config.mode) +
                                ") sigma=" + fmt_double(config.scenarios[i].sigma) +
                                " c_tilde=" + fmt_double(config.scenarios[i].c_tilde));
                run_scenario(config, bundle, bundle_constant, grid, config.scenarios[i], dir,
                             out);
                out.ok = true;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
                log_line(0, "scenario " + std::to_string(i) + " failed: " + out.error);
            }
            out.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        }
    };

    if (jobs <= 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const unsigned k = std::min<unsigned>(jobs, static_cast<unsigned>(n));
        for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    emit_results(summary, config.output_dir);
    return summary;
}

std::vector<std::string> emit_results(const RunSummary& summary, const std::string& out_dir) {
    const fs::path root(out_dir);
    fs::create_directories(root);
    std::vector<std::string> manifest;

    json js;
    js["scenarios"] = json::array();
    for (const auto& s : summary.scenarios) {
        json e;
        e["index"] = s.index;
        e["ok"] = s.ok;
        if (!s.ok) e["error"] = s.error;
        e["results"] = s.results;
        e["files"] = s.files;
        e["wall_ms"] = s.wall_ms;
        js["scenarios"].push_back(e);
        for (const auto& f : s.files) {
            if (!fs::exists(f) || fs::file_size(f) == 0)
                throw IoError("claimed output file missing or empty: " + f);
            manifest.push_back(f);
        }
    }

    const fs::path echo_path = root / "config.echo";
    std::ofstream echo(echo_path);
    if (!echo) throw IoError("cannot write " + echo_path.string());
    echo << summary.config_echo.dump(2) << "\n";
    manifest.push_back(echo_path.string());

    const fs::path sum_path = root / "summary.json";
    std::ofstream sum(sum_path);
    if (!sum) throw IoError("cannot write " + sum_path.string());
    sum << js.dump(2) << "\n";
    manifest.push_back(sum_path.string());
    return manifest;
}

}  // namespace evoshift
