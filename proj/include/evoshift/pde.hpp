#pragma once

#include <cstddef>
#include <vector>

#include "evoshift/grid.hpp"
#include "evoshift/model.hpp"

namespace evoshift {

// Phenotypic density n(t, .) on the grid with its total mass rho(t).
struct PdeState {
    double time = 0.0;
    std::vector<double> density;  // >= 0 at every node
    double mass_rho = 0.0;        // == integrate(density)

    static PdeState make(double t, std::vector<double> density, const Grid1D& grid);
};

// Node samples of the linearized solution m(t, .), or of its Liouville
// transform M(t, x) = m(t, x) exp((c/2 sigma) x).
struct LinearState {
    double time = 0.0;
    std::vector<double> values;  // >= 0
};

struct SolverConfig {
    double dt = 0.0;  // == period_T / steps_per_period
    std::size_t steps_per_period = 512;
    std::size_t max_periods = 512;
    double extinction_threshold = 1e-8;
    double periodic_tolerance = 1e-8;
};

enum class Verdict { Extinct, Periodic, Undecided };

struct Trajectory {
    Verdict verdict = Verdict::Undecided;
    std::size_t periods_run = 0;
    std::vector<double> times;  // dense, one entry per step
    std::vector<double> rho;    // rho(t) at the dense times
    std::vector<PdeState> period_snapshots;  // state at each period boundary
    // Converged cycle, recorded at every step of one extra period after the
    // Periodic verdict (steps_per_period + 1 states); empty otherwise.
    std::vector<PdeState> cycle;
};

// One IMEX step of the nonlocal equation: reaction explicit at the half step,
// advection-diffusion implicit, logistic mass law via the exact sub-step
// n <- n / (1 + dt rho). Clamping that moves relative mass above 1e-12 raises
// PositivityLoss; a mass change above 50% in one step raises StepRejected.
PdeState step_nonlocal(const PdeState& state, const GrowthRateModel& model, double sigma,
                       double c_tilde, const Grid1D& grid, double dt);

// Runs until extinction, convergence to the periodic regime (period-to-period
// max-norm change of the density below periodic_tolerance), or max_periods.
Trajectory simulate(const PdeState& n0, const GrowthRateModel& model, double sigma,
                    double c_tilde, const Grid1D& grid, const SolverConfig& config);

// Multiplies (forward) or divides (backward) node values by exp((c/2 sigma) x).
// Raises OverflowRisk when (|c_tilde| / 2 sigma) R > 600.
LinearState liouville_forward(const LinearState& state, double c_tilde, double sigma,
                              const Grid1D& grid);
LinearState liouville_backward(const LinearState& state, double c_tilde, double sigma,
                               const Grid1D& grid);

// One IMEX step of the linear equation. With use_liouville the drift-free form
// with growth rate a - c^2/(4 sigma) is stepped and the transforms are applied
// at the boundaries of the call.
LinearState step_linear(const LinearState& state, const GrowthRateModel& model, double sigma,
                        double c_tilde, const Grid1D& grid, double dt, bool use_liouville);

// Cached one-step map for loops that take many aligned steps: the implicit
// factorization is built once and the per-node reaction multipliers
// exp(dt a(t + dt/2, x)) are tabulated over one period and reused.
class LinearStepCache {
public:
    LinearStepCache(const GrowthRateModel& model, double sigma, double c_tilde,
                    const Grid1D& grid, std::size_t steps_per_period,
                    double extra_rate = 0.0);

    // Advances values in place from time t_k = k dt; k is taken mod one period.
    void step(std::vector<double>& values, std::size_t k) const;

    double dt() const { return dt_; }
    std::size_t steps_per_period() const { return steps_; }

private:
    double dt_ = 0.0;
    std::size_t steps_ = 0;
    ImplicitSolver solver_;
    std::vector<std::vector<double>> multipliers_;  // [k][node]
    mutable std::vector<double> work_;
};

}  // namespace evoshift
