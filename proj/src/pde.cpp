#include "evoshift/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evoshift/errors.hpp"

namespace evoshift {

namespace {

void check_liouville_exponent(double c_tilde, double sigma, double R) {
    if (std::abs(c_tilde) / (2.0 * sigma) * R > 600.0)
        throw OverflowRisk("liouville: (c/2sigma) R = " +
                           std::to_string(std::abs(c_tilde) / (2.0 * sigma) * R) + " > 600");
}

}  // namespace

PdeState PdeState::make(double t, std::vector<double> density, const Grid1D& grid) {
    PdeState s;
    s.time = t;
    s.mass_rho = integrate(grid, density);
    s.density = std::move(density);
    return s;
}

LinearStepCache::LinearStepCache(const GrowthRateModel& model, double sigma, double c_tilde,
                                 const Grid1D& grid, std::size_t steps_per_period,
                                 double extra_rate)
    : dt_(model.period_T / static_cast<double>(steps_per_period)), steps_(steps_per_period) {
    const TridiagonalOperator A = advection_diffusion_operator(grid, c_tilde, sigma, {});
    solver_ = ImplicitSolver(A, dt_);
    multipliers_.resize(steps_);
    const std::size_t n = grid.n_points;
    for (std::size_t k = 0; k < steps_; ++k) {
        multipliers_[k].assign(n, 0.0);
        const double th = (static_cast<double>(k) + 0.5) * dt_;
        for (std::size_t i = 1; i + 1 < n; ++i)
            multipliers_[k][i] = std::exp(dt_ * (model.rate(th, grid.nodes[i]) + extra_rate));
        // Dirichlet boundary values stay pinned at zero.
    }
    work_.assign(n, 0.0);
}

void LinearStepCache::step(std::vector<double>& values, std::size_t k) const {
    const std::vector<double>& mult = multipliers_[k % steps_];
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) work_[i] = values[i] * mult[i];
    work_[0] = 0.0;
    work_[n - 1] = 0.0;
    solver_.solve(work_, values);
}

namespace {

// Shared IMEX core: explicit reaction at the half step, implicit
// advection-diffusion. No caching; exact for arbitrary start times.
std::vector<double> imex_step(const std::vector<double>& values, const GrowthRateModel& model,
                              double sigma, double c_tilde, const Grid1D& grid, double t,
                              double dt, double extra_rate) {
    const std::size_t n = grid.n_points;
    std::vector<double> w(n, 0.0);
    const double th = t + 0.5 * dt;
    for (std::size_t i = 1; i + 1 < n; ++i)
        w[i] = values[i] * std::exp(dt * (model.rate(th, grid.nodes[i]) + extra_rate));
    const TridiagonalOperator A = advection_diffusion_operator(grid, c_tilde, sigma, {});
    std::vector<double> u;
    ImplicitSolver(A, dt).solve(w, u);
    return u;
}

// Clamp negatives; returns the mass moved (quadrature of the clamped part).
double clamp_negative(std::vector<double>& v, double dx) {
    double moved = 0.0;
    for (double& x : v) {
        if (x < 0.0) {
            moved -= x * dx;
            x = 0.0;
        }
    }
    return moved;
}

}  // namespace

PdeState step_nonlocal(const PdeState& state, const GrowthRateModel& model, double sigma,
                       double c_tilde, const Grid1D& grid, double dt) {
    std::vector<double> u =
        imex_step(state.density, model, sigma, c_tilde, grid, state.time, dt, 0.0);
    const double moved = clamp_negative(u, grid.dx);
    double rho_tilde = integrate(grid, u);
    if (moved > 1e-12 * std::max(1.0, rho_tilde))
        throw PositivityLoss("step_nonlocal: clamping moved mass " + std::to_string(moved));

    // Exact logistic sub-step for the nonlocal death term -rho n.
    const double factor = 1.0 / (1.0 + dt * rho_tilde);
    for (double& x : u) x *= factor;
    const double rho_new = rho_tilde * factor;

    if (state.mass_rho > 0.0) {
        const double change = std::abs(rho_new - state.mass_rho) / state.mass_rho;
        if (change > 0.5)
            throw StepRejected("step_nonlocal: mass changed by " + std::to_string(change * 100) +
                               "% in one step");
    }
    PdeState out;
    out.time = state.time + dt;
    out.density = std::move(u);
    out.mass_rho = rho_new;
    return out;
}

LinearState liouville_forward(const LinearState& state, double c_tilde, double sigma,
                              const Grid1D& grid) {
    check_liouville_exponent(c_tilde, sigma, grid.R);
    LinearState out;
    out.time = state.time;
    out.values.resize(state.values.size());
    const double k = c_tilde / (2.0 * sigma);
    for (std::size_t i = 0; i < state.values.size(); ++i)
        out.values[i] = state.values[i] * std::exp(k * grid.nodes[i]);
    return out;
}

LinearState liouville_backward(const LinearState& state, double c_tilde, double sigma,
                               const Grid1D& grid) {
    check_liouville_exponent(c_tilde, sigma, grid.R);
    LinearState out;
    out.time = state.time;
    out.values.resize(state.values.size());
    const double k = c_tilde / (2.0 * sigma);
    for (std::size_t i = 0; i < state.values.size(); ++i)
        out.values[i] = state.values[i] * std::exp(-k * grid.nodes[i]);
    return out;
}

LinearState step_linear(const LinearState& state, const GrowthRateModel& model, double sigma,
                        double c_tilde, const Grid1D& grid, double dt, bool use_liouville) {
    LinearState out;
    out.time = state.time + dt;
    if (use_liouville && c_tilde != 0.0) {
        const LinearState M = liouville_forward(state, c_tilde, sigma, grid);
        const double penalty = -c_tilde * c_tilde / (4.0 * sigma);
        LinearState Mnext;
        Mnext.time = out.time;
        Mnext.values = imex_step(M.values, model, sigma, 0.0, grid, state.time, dt, penalty);
        out = liouville_backward(Mnext, c_tilde, sigma, grid);
    } else {
        out.values = imex_step(state.values, model, sigma, c_tilde, grid, state.time, dt, 0.0);
    }
    for (double& v : out.values) v = std::max(v, 0.0);
    return out;
}

Trajectory simulate(const PdeState& n0, const GrowthRateModel& model, double sigma,
                    double c_tilde, const Grid1D& grid, const SolverConfig& config) {
    const std::size_t spp = config.steps_per_period;
    if (spp < 64) throw ValidationError("simulate: steps_per_period must be >= 64");
    const double dt = model.period_T / static_cast<double>(spp);
    if (config.dt > 0.0 && std::abs(config.dt - dt) > 1e-12 * dt)
        throw ValidationError("simulate: dt inconsistent with steps_per_period");

    Trajectory traj;
    traj.period_snapshots.push_back(n0);
    traj.times.push_back(n0.time);
    traj.rho.push_back(n0.mass_rho);

    if (n0.mass_rho < config.extinction_threshold) {
        traj.verdict = Verdict::Extinct;
        return traj;
    }

    const LinearStepCache cache(model, sigma, c_tilde, grid, spp);
    PdeState state = n0;
    std::vector<double> prev_period = n0.density;
    // Reaction multipliers are tabulated against t mod T; align the phase.
    const std::size_t k0 = static_cast<std::size_t>(
        std::llround(n0.time / dt) % static_cast<long long>(spp));

    const auto nonlocal_cached_step = [&](PdeState& s, std::size_t k) {
        cache.step(s.density, k);
        const double moved = clamp_negative(s.density, grid.dx);
        double rho_tilde = integrate(grid, s.density);
        if (moved > 1e-12 * std::max(1.0, rho_tilde))
            throw PositivityLoss("simulate: clamping moved mass " + std::to_string(moved));
        const double factor = 1.0 / (1.0 + dt * rho_tilde);
        for (double& x : s.density) x *= factor;
        const double rho_new = rho_tilde * factor;
        if (s.mass_rho > 0.0 && std::abs(rho_new - s.mass_rho) > 0.5 * s.mass_rho)
            throw StepRejected("simulate: mass changed by more than 50% in one step");
        s.mass_rho = rho_new;
        s.time += dt;
    };

    for (std::size_t period = 0; period < config.max_periods; ++period) {
        for (std::size_t k = 0; k < spp; ++k) {
            nonlocal_cached_step(state, k0 + k);
            traj.times.push_back(state.time);
            traj.rho.push_back(state.mass_rho);
        }
        traj.periods_run = period + 1;
        traj.period_snapshots.push_back(state);

        if (state.mass_rho < config.extinction_threshold) {
            traj.verdict = Verdict::Extinct;
            return traj;
        }
        double change = 0.0;
        for (std::size_t i = 0; i < state.density.size(); ++i)
            change = std::max(change, std::abs(state.density[i] - prev_period[i]));
        prev_period = state.density;
        if (change < config.periodic_tolerance) {
            traj.verdict = Verdict::Periodic;
            break;
        }
    }

    if (traj.verdict == Verdict::Periodic) {
        // Record the converged cycle over one extra period.
        traj.cycle.push_back(state);
        for (std::size_t k = 0; k < spp; ++k) {
            nonlocal_cached_step(state, k0 + k);
            traj.times.push_back(state.time);
            traj.rho.push_back(state.mass_rho);
            traj.cycle.push_back(state);
        }
    }
    return traj;
}

}  // namespace evoshift
