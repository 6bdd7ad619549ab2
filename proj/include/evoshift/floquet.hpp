#pragma once

#include <cstddef>
#include <vector>

#include "evoshift/grid.hpp"
#include "evoshift/model.hpp"

namespace evoshift {

// Uniformly sampled T-periodic scalar function with linear interpolation.
struct PeriodicTable {
    double period_T = 1.0;
    std::vector<double> times;   // 0 = t_0 < ... < t_N = T
    std::vector<double> values;  // values[N] == values[0] up to solver tolerance

    double operator()(double t) const;
    double mean() const;
};

// Principal eigenpair of the time-periodic problem on [-R, R], sign convention
//   dp/dt - c dp/dx - sigma d2p/dx2 - a p = lambda p,
// so the monodromy growth factor is mu = exp(-lambda T) and survival means
// lambda < 0. Snapshots are normalized so that sup_x p(0, x) = 1.
struct FloquetEigenpair {
    double lambda = 0.0;
    double growth_factor = 1.0;  // mu
    std::vector<double> times;   // stored sub-period times, 0 .. T
    std::vector<std::vector<double>> eigenfunction;  // snapshot per stored time
    double residual = 0.0;       // max-norm PDE residual (diagnostic)
    std::size_t iterations = 0;
    bool used_liouville = false;
};

struct PeriodicQuantities {
    PeriodicTable Qc;        // weighted mean growth rate per stored time
    std::vector<std::vector<double>> Pc;  // profiles with unit integral
    PeriodicTable rho_hat;   // explicit periodic population size
    double int_Qc = 0.0;     // int_0^T Qc dt == -lambda T
};

// Integrates the linear equation over exactly one period starting at t = 0.
std::vector<double> monodromy_apply(const std::vector<double>& v, const GrowthRateModel& model,
                                    double sigma, double c_tilde, const Grid1D& grid,
                                    std::size_t steps_per_period);

// Power iteration on the period map. Converged when the relative change of the
// log growth factor drops below tol and the eigenvector max-norm change below
// 1e-8. Uses the Liouville drift-free form when (|c|/2 sigma) R <= 40.
FloquetEigenpair principal_eigenpair(const GrowthRateModel& model, double sigma, double c_tilde,
                                     const Grid1D& grid, std::size_t steps_per_period,
                                     double tol = 1e-10, std::size_t max_iters = 5000);

// Critical environmental shift speed 2 sqrt(-sigma lambda_{0,sigma}), or 0
// when lambda_{0,sigma} >= 0.
double critical_speed(const GrowthRateModel& model, double sigma, const Grid1D& grid,
                      std::size_t steps_per_period, double tol = 1e-10,
                      std::size_t max_iters = 5000);

// Q_c, P_c and the explicit periodic population size; NonviablePopulation
// when int_0^T Q_c dt <= 0.
PeriodicQuantities periodic_quantities(const FloquetEigenpair& eig, const GrowthRateModel& model,
                                       const Grid1D& grid);

// Unique periodic solution of d rho/dt = rho (growth(t) - rho) by the explicit
// formula; NonviablePopulation when int_0^T growth dt <= 0.
PeriodicTable periodic_logistic(const TimeFn& growth, double T, std::size_t n_samples = 512);

// Table variant: growth sampled uniformly on [0, T] (endpoint included).
PeriodicTable periodic_logistic_from_table(const std::vector<double>& growth, double T);

struct TailDecayReport {
    double nu = 0.0;           // exponent of the a-priori bound
    double slope_left = 0.0;   // fitted d log p / d|x| on x < 0
    double slope_right = 0.0;  // on x > 0
    bool pass = false;
};

// Fits the log-slope of p(0, .) on R0 <= |x| <= R - 1 and compares with -nu.
TailDecayReport decay_tail_check(const FloquetEigenpair& eig, const TailHypothesis& tail,
                                 double sigma, double c_tilde, const Grid1D& grid,
                                 double margin = 1e-2);

}  // namespace evoshift
