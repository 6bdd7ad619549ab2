#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "evoshift/errors.hpp"
#include "evoshift/grid.hpp"

using namespace evoshift;

TEST_CASE("grid construction") {
    const Grid1D tiny(1.0, 3);  // smallest legible grid
    CHECK(tiny.dx == doctest::Approx(1.0));
    CHECK(tiny.nodes[0] == doctest::Approx(-1.0));
    CHECK(tiny.nodes[1] == doctest::Approx(0.0));
    CHECK(tiny.nodes[2] == doctest::Approx(1.0));

    const Grid1D g = build_grid(6.0, 2049);
    CHECK(g.dx == doctest::Approx(12.0 / 2048.0));
    CHECK(g.nodes.front() == -6.0);
    CHECK(g.nodes.back() == 6.0);
    for (std::size_t i = 1; i < g.n_points; ++i) CHECK(g.nodes[i] > g.nodes[i - 1]);

    CHECK_THROWS_AS(build_grid(6.0, 8), InvalidGrid);
    CHECK_THROWS_AS(build_grid(-1.0, 200), InvalidGrid);
}

TEST_CASE("trapezoid integration on the grid") {
    const Grid1D g(1.0, 101);
    std::vector<double> ones(g.n_points, 1.0);
    CHECK(integrate(g, ones) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(integrate(g, g.nodes) == doctest::Approx(0.0).epsilon(1e-14));

    const Grid1D wide = build_grid(8.0, 4097);
    std::vector<double> gauss(wide.n_points);
    for (std::size_t i = 0; i < wide.n_points; ++i)
        gauss[i] = std::exp(-0.5 * wide.nodes[i] * wide.nodes[i]) / std::sqrt(2.0 * M_PI);
    CHECK(integrate(wide, gauss) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("stencil exactness on polynomials") {
    const Grid1D g(2.0, 201);
    std::vector<double> none;
    const TridiagonalOperator lap = advection_diffusion_operator(g, 0.0, 1.0, none);
    std::vector<double> x2(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) x2[i] = g.nodes[i] * g.nodes[i];
    const std::vector<double> lx2 = lap.apply(x2);
    for (std::size_t i = 1; i + 1 < g.n_points; ++i)
        CHECK(lx2[i] == doctest::Approx(2.0).epsilon(1e-10));

    const TridiagonalOperator ad = advection_diffusion_operator(g, 1.0, 1.0, none);
    const std::vector<double> lx = ad.apply(g.nodes);
    for (std::size_t i = 1; i + 1 < g.n_points; ++i)
        CHECK(lx[i] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Peclet number switches the advection stencil") {
    const Grid1D g(1.0, 21);  // dx = 0.1
    std::vector<double> none;
    // Peclet = 1 * 0.1 / (2e-3) = 50: upwind
    const TridiagonalOperator up = advection_diffusion_operator(g, 1.0, 1e-3, none);
    const double sdx2 = 1e-3 / (g.dx * g.dx);
    CHECK(up.upper[5] == doctest::Approx(sdx2 + 1.0 / g.dx));
    CHECK(up.lower[5] == doctest::Approx(sdx2));
    CHECK(up.diag[5] == doctest::Approx(-2.0 * sdx2 - 1.0 / g.dx));

    // Peclet = 1 * 0.1 / 2 = 0.05: central
    const TridiagonalOperator ce = advection_diffusion_operator(g, 1.0, 1.0, none);
    CHECK(ce.upper[5] == doctest::Approx(1.0 / (g.dx * g.dx) + 0.5 / g.dx));
    CHECK(ce.lower[5] == doctest::Approx(1.0 / (g.dx * g.dx) - 0.5 / g.dx));

    // negative drift upwinds from the left
    const TridiagonalOperator dn = advection_diffusion_operator(g, -1.0, 1e-3, none);
    CHECK(dn.lower[5] == doctest::Approx(sdx2 + 1.0 / g.dx));
    CHECK(dn.upper[5] == doctest::Approx(sdx2));
}

TEST_CASE("discrete integration by parts reduces to boundary fluxes") {
    const Grid1D g(3.0, 257);
    std::vector<double> none;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::vector<double> u(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double x = g.nodes[i];
        u[i] = std::exp(-0.3 * x * x) * (1.0 + 0.5 * std::sin(2.0 * x)) + 0.1 * amp(rng);
    }
    const double sigma = 0.7, drift = 0.4;
    const TridiagonalOperator A = advection_diffusion_operator(g, drift, sigma, none);
    const std::vector<double> Au = A.apply(u);
    double interior_sum = 0.0;
    for (std::size_t i = 1; i + 1 < g.n_points; ++i) interior_sum += Au[i];
    const std::size_t n = g.n_points;
    // telescoped fluxes of the central stencils
    const double diff_flux =
        sigma / (g.dx * g.dx) * (u[0] - u[1] + u[n - 1] - u[n - 2]);
    const double adv_flux = drift / (2.0 * g.dx) * (u[n - 1] + u[n - 2] - u[0] - u[1]);
    CHECK(interior_sum == doctest::Approx(diff_flux + adv_flux).epsilon(1e-10));
}

TEST_CASE("operator converges at second order on smooth data") {
    auto max_err = [](std::size_t n) {
        const Grid1D g(2.0, n);
        std::vector<double> none;
        const double sigma = 0.8, drift = 0.5;
        const TridiagonalOperator A = advection_diffusion_operator(g, drift, sigma, none);
        std::vector<double> u(g.n_points);
        for (std::size_t i = 0; i < g.n_points; ++i) u[i] = std::sin(g.nodes[i]);
        const std::vector<double> Au = A.apply(u);
        double err = 0.0;
        for (std::size_t i = 1; i + 1 < g.n_points; ++i) {
            const double x = g.nodes[i];
            const double want = drift * std::cos(x) - sigma * std::sin(x);
            err = std::max(err, std::abs(Au[i] - want));
        }
        return err;
    };
    const double e1 = max_err(65), e2 = max_err(129), e3 = max_err(257);
    CHECK(e1 / e2 > 3.5);
    CHECK(e2 / e3 > 3.5);
}

TEST_CASE("implicit solver inverts (I - dt A)") {
    const Grid1D g(2.0, 129);
    std::vector<double> reaction(g.n_points, 0.3);
    const TridiagonalOperator A = advection_diffusion_operator(g, 0.4, 0.9, reaction);
    const double dt = 0.01;
    const ImplicitSolver solver(A, dt);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    std::vector<double> rhs(g.n_points);
    for (double& v : rhs) v = ur(rng);
    std::vector<double> u;
    solver.solve(rhs, u);
    const std::vector<double> Au = A.apply(u);
    for (std::size_t i = 0; i < g.n_points; ++i)
        CHECK(u[i] - dt * Au[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}
