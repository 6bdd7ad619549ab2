#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "evoshift/floquet.hpp"
#include "evoshift/grid.hpp"
#include "evoshift/model.hpp"
#include "evoshift/pde.hpp"

namespace evoshift {

// Explicit solution of the limiting Hamilton-Jacobi problem:
//   psi(x) = (c/2)(x_bar - x) + int_{x_bar}^{x_m} sqrt(abar(x_m) - abar) dy
//            - | int_{x_m}^{x} sqrt(abar(x_m) - abar) dy |
// with max psi = psi(x_bar) = 0 and rho_bar = abar(x_bar) = abar(x_m) - c^2/4.
struct HJProfile {
    std::function<double(double)> psi;
    double x_m = 0.0;
    double x_bar = 0.0;   // lag trait, x_bar <= x_m
    double rho_bar = 0.0;
    double c = 0.0;       // rescaled shift speed
    // Fitted constants of the a-priori bounds -A1 x^2 - (c/2) x - A2 <= psi <= c1 - c2 |x|.
    double c1 = 0.0;
    double c2 = 0.0;
    double A1 = 0.0;
    double A2 = 0.0;
};

// First-order corrector: dphi/dx at t = 0, the regular part G, the mean-drift
// function D(t) = dphi/dx(t, x_bar), and the eigenvalue correction lambda2.
struct CorrectorData {
    std::function<double(double)> phi_x0;
    std::function<double(double)> G;
    PeriodicTable D;
    double lambda2 = 0.0;  // sqrt(-abar_xx(x_m)/2)
    double K = 0.0;        // max of |dphi/dx|^2 + |d2phi/dx2| on a dense grid
};

// Coefficients of psi(x) = -(A/2) u^2 + B u^3 + C u^4 + o(u^4), u = x - x_bar.
struct TaylorCoefficients {
    double A = 0.0;  // -psi_xx(x_bar) > 0 for nondegenerate maxima
    double B = 0.0;
    double C = 0.0;
};

struct MomentReport {
    PeriodicTable mu_measured;
    PeriodicTable var_measured;
    PeriodicTable mu_predicted;   // x_bar + eps (3B/A^2 + D(t)/A)
    double var_predicted = 0.0;   // eps / A
    double mu_max_gap = 0.0;
    double var_max_gap = 0.0;
    double mu_mean_measured = 0.0;
    double mu_mean_predicted = 0.0;
};

struct ExpansionEntry {
    double epsilon = 0.0;
    double rho_bar_predicted = 0.0;  // abar(x_m) - c^2/4 - eps lambda2
    double cstar_predicted = 0.0;    // 2 sqrt(abar(x_m)) - eps sqrt(-abar_xx/(2 abar(x_m)))
};

struct AsymptoticReport {
    double x_m = 0.0;
    double x_bar = 0.0;
    double rho_bar_limit = 0.0;
    double cstar_limit = 0.0;
    double lambda2 = 0.0;
    std::vector<ExpansionEntry> entries;
};

// Hopf-Cole transform psi_eps = eps (log n + (1/2) log(2 pi eps)); densities
// below 1e-300 are floored before the log.
std::vector<double> hopf_cole(const PdeState& state, double epsilon);

// Solves abar(x_bar) = abar(x_m) - c^2/4 for the root closest to x_m from the
// left on (bracket_lo, x_m]. Throws NoRoot / AmbiguousRoot.
double solve_xbar(const AveragedRate& avg, double c);

HJProfile explicit_psi(const AveragedRate& avg, double x_bar, double c, double delta = 0.05);

// Branch formula for psi_xx; returns -sqrt(-abar_xx(x_m)/2) at x = x_m.
double psi_second_derivative(const AveragedRate& avg, double x);

CorrectorData corrector(const GrowthRateModel& model, const AveragedRate& avg,
                        const HJProfile& profile);

// Least-squares quartic fit of the explicit psi on |x - x_bar| <= 0.2.
TaylorCoefficients taylor_coefficients(const HJProfile& profile);

AsymptoticReport expansion_report(const AveragedRate& avg, double c,
                                  const std::vector<double>& epsilon_list);

// Measured moments of a Periodic trajectory against the corrector predictions.
MomentReport measure_moments(const Trajectory& traj, const Grid1D& grid, double epsilon,
                             double x_bar, const CorrectorData& corr,
                             const TaylorCoefficients& taylor);

struct CaseScenarioResult {
    double rho_bar_formula = 0.0;
    double mu_mean_formula = 0.0;
    double cstar_formula = 0.0;
    bool has_solver = false;
    double rho_bar_solver = 0.0;
    double cstar_solver = 0.0;
};

struct CaseComparison {
    CaseScenarioResult periodic;
    CaseScenarioResult constant;
    // Orderings emitted as signs of (periodic - constant); negative means the
    // periodic scenario is smaller.
    double rho_gap_formula = 0.0;
    double cstar_gap_formula = 0.0;
    double rho_gap_solver = 0.0;
    double cstar_gap_solver = 0.0;
};

struct CaseSolverOptions {
    Grid1D grid;
    std::size_t steps_per_period = 512;
    double tol = 1e-10;
    std::size_t max_iters = 5000;
};

// Formula-based (and optionally solver-based) comparison of two quadratic
// scenarios at rescaled speed c and mutation scale epsilon.
CaseComparison case_comparison(QuadraticRateParams params_periodic,
                               QuadraticRateParams params_constant, double c, double epsilon,
                               const CaseSolverOptions* solver = nullptr);

}  // namespace evoshift
