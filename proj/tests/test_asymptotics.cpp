#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evoshift/asymptotics.hpp"
#include "evoshift/errors.hpp"
#include "evoshift/quadrature.hpp"
#include "oracles.hpp"

using namespace evoshift;

namespace {

QuadraticRateParams sin_theta_params() {
    QuadraticRateParams p;
    p.r = 2.0;
    p.g = [](double) { return 1.0; };
    p.theta = [](double t) { return std::sin(2.0 * M_PI * t); };
    return p;
}

GrowthRateModel quartic_model() {
    GrowthRateModel m;
    m.period_T = 1.0;
    m.rate = [](double, double x) { return 1.0 - x * x - 0.3 * x * x * x * x; };
    m.rate_dx = [](double, double x) { return -2.0 * x - 1.2 * x * x * x; };
    m.rate_dxx = [](double, double x) { return -2.0 - 3.6 * x * x; };
    m.rate_dxxx = [](double, double x) { return -7.2 * x; };
    m.sup_bound_d0 = 500.0;
    return m;
}

}  // namespace

TEST_CASE("hopf_cole inverts the WKB ansatz") {
    const Grid1D g = build_grid(4.0, 257);
    const double eps = 0.05;
    std::vector<double> n(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i)
        n[i] = std::exp(-0.5 * g.nodes[i] * g.nodes[i] / eps) / std::sqrt(2.0 * M_PI * eps);
    PdeState s = PdeState::make(0.0, n, g);
    const std::vector<double> psi = hopf_cole(s, eps);
    for (std::size_t i = 0; i < g.n_points; ++i)
        CHECK(psi[i] == doctest::Approx(-0.5 * g.nodes[i] * g.nodes[i]).epsilon(1e-12));

    // round trip back to the density
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double back = std::exp(psi[i] / eps) / std::sqrt(2.0 * M_PI * eps);
        CHECK(back == doctest::Approx(s.density[i]).epsilon(1e-12));
    }

    // flooring keeps zero densities finite
    PdeState zero = PdeState::make(0.0, std::vector<double>(g.n_points, 0.0), g);
    for (const double v : hopf_cole(zero, eps)) CHECK(std::isfinite(v));
}

TEST_CASE("solve_xbar: zero lag at c=0, section-6 closed form, derived value") {
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    CHECK(solve_xbar(avg, 0.0) == avg.x_m);
    CHECK(solve_xbar(avg, 1.0) == doctest::Approx(-0.5).epsilon(1e-10));

    QuadraticRateParams q;
    q.r = 2.0;
    q.g = [](double t) { return 1.3 + 0.4 * std::cos(2.0 * M_PI * t); };
    q.theta = [](double t) { return 0.5 + 0.2 * std::sin(2.0 * M_PI * t); };
    quadratic_model(q);
    const AveragedRate avgq = quadratic_average(q);
    const double c = 0.7;
    const double want = q.g1 / q.gbar - 0.5 * c / std::sqrt(q.gbar);
    CHECK(solve_xbar(avgq, c) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("solve_xbar failure modes: no root, ambiguous root") {
    GrowthRateModel m;
    m.period_T = 1.0;
    m.rate = [](double, double x) { return 1.5 - x * x; };
    m.sup_bound_d0 = 50.0;
    const AveragedRate narrow = averaged_rate(m, 64, -0.5, 1.0);
    CHECK_THROWS_AS(solve_xbar(narrow, 2.0), NoRoot);  // target below abar on bracket

    GrowthRateModel wiggly;
    wiggly.period_T = 1.0;
    wiggly.rate = [](double, double x) {
        return 1.0 - x * x + std::exp(-80.0 * (x + 1.5) * (x + 1.5));
    };
    wiggly.sup_bound_d0 = 50.0;
    const AveragedRate avgw = averaged_rate(wiggly, 64, -3.0, 3.0);
    // target -0.5 cuts the base parabola, the bump and the far tail: 3 crossings
    CHECK_THROWS_AS(solve_xbar(avgw, std::sqrt(6.0)), AmbiguousRoot);
}

TEST_CASE("explicit psi is exactly quadratic for the section-6 family") {
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const double c = 1.0;
    const double x_bar = solve_xbar(avg, c);
    const HJProfile prof = explicit_psi(avg, x_bar, c);

    CHECK(prof.rho_bar == doctest::Approx(1.25));
    CHECK(prof.psi(x_bar) == 0.0);  // exact by construction
    for (const double x : {-2.0, -1.0, -0.5, 0.0, 0.7, 1.9})
        CHECK(prof.psi(x) ==
              doctest::Approx(-0.5 * (x - x_bar) * (x - x_bar)).epsilon(1e-10));

    // discrete stationarity and maximality at x_bar
    const double h = 1e-5;
    CHECK(std::abs(prof.psi(x_bar + h) - prof.psi(x_bar - h)) / (2.0 * h) < 1e-4);
    for (double x = -3.0; x <= 3.0; x += 0.1) CHECK(prof.psi(x) <= 1e-15);
}

TEST_CASE("psi_x branch formula differentiates psi away from x_m") {
    const AveragedRate avg = averaged_rate(quartic_model(), 64, -4.0, 4.0);
    const double c = 0.8;
    const double x_bar = solve_xbar(avg, c);
    const HJProfile prof = explicit_psi(avg, x_bar, c);
    const double h = 1e-6;
    for (const double x : {-1.5, -0.7, 0.4, 1.2}) {
        const double fd = (prof.psi(x + h) - prof.psi(x - h)) / (2.0 * h);
        const double f = avg.abar_max - avg.abar(x);
        const double branch = x < avg.x_m ? -0.5 * c + std::sqrt(f) : -0.5 * c - std::sqrt(f);
        CHECK(fd == doctest::Approx(branch).epsilon(1e-5));
    }
}

TEST_CASE("Hamilton-Jacobi residual vanishes for quadratic and quartic rates") {
    auto residual = [](const AveragedRate& avg, double c) {
        const double rho_bar = avg.abar_max - 0.25 * c * c;
        double worst = 0.0;
        for (double x = -3.0; x <= 3.0; x += 0.002) {
            if (std::abs(x - avg.x_m) < 1e-3) continue;
            const double f = std::max(0.0, avg.abar_max - avg.abar(x));
            const double px = x < avg.x_m ? -0.5 * c + std::sqrt(f) : -0.5 * c - std::sqrt(f);
            worst = std::max(worst, std::abs(-(px + 0.5 * c) * (px + 0.5 * c) -
                                             (avg.abar(x) - rho_bar - 0.25 * c * c)));
        }
        return worst;
    };
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    CHECK(residual(quadratic_average(p), 1.0) <= 1e-8);
    CHECK(residual(averaged_rate(quartic_model(), 64, -4.0, 4.0), 0.8) <= 1e-8);
}

TEST_CASE("negative radicand is detected when x_m is mislocated") {
    AveragedRate bogus;
    bogus.abar = [](double x) { return 1.0 - (x - 0.5) * (x - 0.5); };
    bogus.abar_dx = [](double x) { return -2.0 * (x - 0.5); };
    bogus.abar_dxx = [](double) { return -2.0; };
    bogus.abar_dxxx = [](double) { return 0.0; };
    bogus.x_m = 0.0;  // wrong on purpose: true maximum sits at 0.5
    bogus.abar_max = bogus.abar(0.0);
    bogus.abar_dxx_at_xm = -2.0;
    bogus.bracket_lo = -3.0;
    bogus.bracket_hi = 3.0;
    CHECK_THROWS_AS(explicit_psi(bogus, -0.1, 0.0), NegativeRadicand);
}

TEST_CASE("psi_xx branch formula and its limits at x_m") {
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    for (const double x : {-1.5, 0.0, 0.3, 2.0})
        CHECK(psi_second_derivative(avg, x) == doctest::Approx(-1.0).epsilon(1e-10));

    const AveragedRate avg4 = averaged_rate(quartic_model(), 64, -4.0, 4.0);
    CHECK(psi_second_derivative(avg4, avg4.x_m) ==
          doctest::Approx(-std::sqrt(-avg4.abar_dxx_at_xm / 2.0)).epsilon(1e-10));
    const double left = psi_second_derivative(avg4, avg4.x_m - 1e-4);
    const double right = psi_second_derivative(avg4, avg4.x_m + 1e-4);
    const double mid = psi_second_derivative(avg4, avg4.x_m);
    CHECK(std::abs(left - mid) < 1e-6);
    CHECK(std::abs(right - mid) < 1e-6);
}

TEST_CASE("corrector: quadratic closed form for D(t)") {
    // r=2, g=1, theta=sin(2 pi t), c=1: D(t) = -cos(2 pi t)/pi.
    QuadraticRateParams p = sin_theta_params();
    const GrowthRateModel m = quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const double c = 1.0;
    const double x_bar = solve_xbar(avg, c);
    const HJProfile prof = explicit_psi(avg, x_bar, c);
    const CorrectorData corr = corrector(m, avg, prof);

    CHECK(corr.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
    for (const double t : {0.0, 0.25, 0.5, 0.75, 1.0})  // table-aligned
        CHECK(corr.D(t) == doctest::Approx(-std::cos(2.0 * M_PI * t) / M_PI).epsilon(1e-6));
    for (const double t : {0.131, 0.357, 0.89})  // linear interpolation between nodes
        CHECK(corr.D(t) == doctest::Approx(-std::cos(2.0 * M_PI * t) / M_PI).epsilon(1e-4));

    // invariants: periodic and mean zero for the quadratic family
    CHECK(corr.D.values.front() == doctest::Approx(corr.D.values.back()).epsilon(1e-10));
    CHECK(quad::simpson_uniform(corr.D.values,
                                1.0 / static_cast<double>(corr.D.values.size() - 1)) ==
          doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("corrector: time-constant quadratic rate yields D identically zero") {
    QuadraticRateParams p;
    p.r = 1.0;
    p.g = [](double) { return 1.0; };
    p.theta = [](double) { return 0.0; };
    const GrowthRateModel m = quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const double x_bar = solve_xbar(avg, 0.5);
    const CorrectorData corr = corrector(m, avg, explicit_psi(avg, x_bar, 0.5));
    for (const double v : corr.D.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("corrector consistency: lambda2 equals -psi_xx(x_m)") {
    const GrowthRateModel m4 = quartic_model();
    const AveragedRate avg4 = averaged_rate(m4, 64, -4.0, 4.0);
    const double x_bar = solve_xbar(avg4, 0.6);
    const CorrectorData corr = corrector(m4, avg4, explicit_psi(avg4, x_bar, 0.6));
    CHECK(corr.lambda2 ==
          doctest::Approx(-psi_second_derivative(avg4, avg4.x_m)).epsilon(1e-10));
    CHECK(corr.K > 0.0);
}

TEST_CASE("corrector rejects degenerate curvature") {
    AveragedRate flat;
    flat.abar = [](double) { return 1.0; };
    flat.abar_dx = [](double) { return 0.0; };
    flat.abar_dxx = [](double) { return 0.0; };
    flat.abar_dxxx = [](double) { return 0.0; };
    flat.x_m = 0.0;
    flat.abar_max = 1.0;
    flat.abar_dxx_at_xm = 0.0;
    flat.bracket_lo = -1.0;
    flat.bracket_hi = 1.0;
    GrowthRateModel m;
    m.period_T = 1.0;
    m.rate = [](double, double) { return 1.0; };
    HJProfile prof;
    prof.x_m = 0.0;
    prof.x_bar = 0.0;
    prof.c = 0.0;
    prof.psi = [](double) { return 0.0; };
    CHECK_THROWS_AS(corrector(m, flat, prof), DegenerateCurvature);
}

TEST_CASE("taylor coefficients of psi at x_bar") {
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const double x_bar = solve_xbar(avg, 1.0);
    const TaylorCoefficients tc = taylor_coefficients(explicit_psi(avg, x_bar, 1.0));
    CHECK(tc.A == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(tc.B) < 1e-7);
    CHECK(std::abs(tc.C) < 1e-6);

    const AveragedRate avg4 = averaged_rate(quartic_model(), 64, -4.0, 4.0);
    const double xb4 = solve_xbar(avg4, 0.6);
    const HJProfile prof4 = explicit_psi(avg4, xb4, 0.6);
    const TaylorCoefficients tc4 = taylor_coefficients(prof4);
    const double h = 1e-4;
    const double fd_xx =
        (prof4.psi(xb4 + h) - 2.0 * prof4.psi(xb4) + prof4.psi(xb4 - h)) / (h * h);
    CHECK(tc4.A == doctest::Approx(-fd_xx).epsilon(1e-3));
}

TEST_CASE("expansion report reproduces the derived section-6 numbers") {
    QuadraticRateParams p = sin_theta_params();
    quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const AsymptoticReport rep = expansion_report(avg, 1.0, {0.1, 0.05});
    CHECK(rep.rho_bar_limit == doctest::Approx(1.25));
    CHECK(rep.lambda2 == doctest::Approx(1.0));
    CHECK(rep.entries[0].rho_bar_predicted == doctest::Approx(1.15));
    CHECK(rep.entries[0].cstar_predicted ==
          doctest::Approx(2.0 * std::sqrt(1.5) - 0.1 * std::sqrt(1.0 / 1.5)).epsilon(1e-12));

    const AsymptoticReport limit = expansion_report(avg, 0.0, {1e-12});
    CHECK(limit.entries[0].rho_bar_predicted == doctest::Approx(avg.abar_max));
}

TEST_CASE("case comparison: degenerate equality and the two section-6 orderings") {
    QuadraticRateParams a = sin_theta_params();
    QuadraticRateParams b = sin_theta_params();
    const CaseComparison same = case_comparison(a, b, 1.0, 0.1);
    CHECK(same.rho_gap_formula == 0.0);
    CHECK(same.cstar_gap_formula == 0.0);

    // Case 1: g constant, theta oscillating vs frozen: fluctuations hurt.
    QuadraticRateParams c1p = sin_theta_params();
    QuadraticRateParams c1c;
    c1c.r = 2.0;
    c1c.g = [](double) { return 1.0; };
    c1c.theta = [](double) { return 0.0; };
    const CaseComparison k1 = case_comparison(c1p, c1c, 1.0, 0.1);
    CHECK(k1.rho_gap_formula < 0.0);
    CHECK(k1.cstar_gap_formula < 0.0);

    // Case 2: theta constant, concave g(e): fluctuations help.
    QuadraticRateParams c2p;
    c2p.r = 2.0;
    c2p.g = [](double t) {
        const double e = std::sin(2.0 * M_PI * t);
        return 1.0 / (1.0 + e * e);
    };
    c2p.theta = [](double) { return 0.0; };
    QuadraticRateParams c2c = c1c;
    const CaseComparison k2 = case_comparison(c2p, c2c, 1.0, 0.1);
    CHECK(k2.rho_gap_formula > 0.0);
    CHECK(k2.cstar_gap_formula > 0.0);
    // gbar = 1/sqrt(2) for this pressure profile
    CHECK(k2.periodic.rho_bar_formula ==
          doctest::Approx(2.0 - 0.25 - 0.1 * std::sqrt(1.0 / std::sqrt(2.0))).epsilon(1e-6));
}

TEST_CASE("measured moments of a symmetric stationary state") {
    // c = 0, even rate: the converged state is even, mu = 0, var = eps/sqrt(gbar).
    QuadraticRateParams p;
    p.r = 1.0;
    p.g = [](double) { return 1.0; };
    p.theta = [](double) { return 0.0; };
    const GrowthRateModel m = quadratic_model(p);
    const AveragedRate avg = quadratic_average(p);
    const Grid1D g = build_grid(6.0, 513);
    const double eps = 0.15, sigma = eps * eps;

    std::vector<double> n0(g.n_points, 0.0);
    for (std::size_t i = 1; i + 1 < g.n_points; ++i)
        n0[i] = std::exp(-0.5 * g.nodes[i] * g.nodes[i] / std::sqrt(sigma));
    PdeState start = PdeState::make(0.0, n0, g);

    SolverConfig sc;
    sc.steps_per_period = 128;
    sc.dt = 1.0 / 128.0;
    sc.max_periods = 200;
    sc.extinction_threshold = 1e-8;
    sc.periodic_tolerance = 1e-9;
    const Trajectory traj = simulate(start, m, sigma, 0.0, g, sc);
    REQUIRE(traj.verdict == Verdict::Periodic);

    const double x_bar = solve_xbar(avg, 0.0);
    const HJProfile prof = explicit_psi(avg, x_bar, 0.0);
    const CorrectorData corr = corrector(m, avg, prof);
    const TaylorCoefficients tc = taylor_coefficients(prof);
    const MomentReport rep = measure_moments(traj, g, eps, x_bar, corr, tc);

    CHECK(std::abs(rep.mu_mean_measured) < 1e-9);      // symmetry
    CHECK(rep.var_predicted == doctest::Approx(eps).epsilon(1e-6));
    CHECK(rep.var_max_gap < 0.2 * eps);

    Trajectory undecided = traj;
    undecided.verdict = Verdict::Undecided;
    CHECK_THROWS_AS(measure_moments(undecided, g, eps, x_bar, corr, tc), ValidationError);
}
