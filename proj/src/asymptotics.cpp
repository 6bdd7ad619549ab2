#include "evoshift/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "evoshift/errors.hpp"
#include "evoshift/quadrature.hpp"

namespace evoshift {

namespace {

constexpr double kDensityFloor = 1e-300;

// Signed integral W(x) = int_{x_m}^{x} sqrt(abar(x_m) - abar(y)) dy.
// The substitution y = x_m +/- s^2 removes the square-root singularity at x_m.
double sqrt_integral(const AveragedRate& avg, double x) {
    const double xm = avg.x_m, amax = avg.abar_max;
    if (x == xm) return 0.0;
    const bool right = x > xm;
    const double len = std::sqrt(std::abs(x - xm));
    auto integrand = [&](double s) {
        const double y = right ? xm + s * s : xm - s * s;
        double f = amax - avg.abar(y);
        if (f < -1e-12)
            throw NegativeRadicand("explicit_psi: abar exceeds abar(x_m) by " +
                                   std::to_string(-f) + " at y=" + std::to_string(y));
        if (f < 0.0) f = 0.0;
        return 2.0 * s * std::sqrt(f);
    };
    const double I = quad::adaptive_simpson(integrand, 0.0, len, 1e-13);
    return right ? I : -I;
}

}  // namespace

std::vector<double> hopf_cole(const PdeState& state, double epsilon) {
    std::vector<double> psi(state.density.size());
    const double shift = 0.5 * std::log(2.0 * M_PI * epsilon);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double n = std::max(state.density[i], kDensityFloor);
        psi[i] = epsilon * (std::log(n) + shift);
    }
    return psi;
}

double solve_xbar(const AveragedRate& avg, double c) {
    if (c < 0.0) throw ValidationError("solve_xbar: c must be nonnegative");
    if (c == 0.0) return avg.x_m;
    const double target = avg.abar_max - 0.25 * c * c;
    auto h = [&](double x) { return avg.abar(x) - target; };

    // Scan left from x_m for sign changes; h(x_m) = c^2/4 > 0.
    const std::size_t n_scan = 4096;
    const double lo = avg.bracket_lo, hi = avg.x_m;
    double prev_x = hi, prev_h = h(hi);
    double root_lo = 0.0, root_hi = 0.0;
    int crossings = 0;
    for (std::size_t i = 1; i <= n_scan; ++i) {
        const double x = hi - (hi - lo) * static_cast<double>(i) / static_cast<double>(n_scan);
        const double hx = h(x);
        if (prev_h > 0.0 && hx <= 0.0) {
            ++crossings;
            if (crossings == 1) {
                root_lo = x;
                root_hi = prev_x;
            }
        } else if (prev_h <= 0.0 && hx > 0.0) {
            ++crossings;
        }
        prev_x = x;
        prev_h = hx;
    }
    if (crossings == 0)
        throw NoRoot("solve_xbar: abar never reaches abar(x_m) - c^2/4 = " +
                     std::to_string(target) + " on the bracket");
    if (crossings > 1)
        throw AmbiguousRoot("solve_xbar: " + std::to_string(crossings) +
                            " sign changes; (H3) uniqueness violated");
    return quad::bisect_root(h, root_lo, root_hi, 1e-12);
}

HJProfile explicit_psi(const AveragedRate& avg, double x_bar, double c, double delta) {
    HJProfile prof;
    prof.x_m = avg.x_m;
    prof.x_bar = x_bar;
    prof.c = c;
    prof.rho_bar = avg.abar_max - 0.25 * c * c;

    const double W_bar = sqrt_integral(avg, x_bar);  // <= 0 since x_bar <= x_m
    prof.psi = [avg, x_bar, c, W_bar](double x) {
        const double W = sqrt_integral(avg, x);
        return 0.5 * c * (x_bar - x) - W_bar - std::abs(W);
    };

    // Fitted bound constants, diagnostic only.
    prof.c2 = -0.5 * c + std::sqrt(delta + 0.5 * c * c);
    const std::size_t m = 257;
    double c1 = -std::numeric_limits<double>::infinity();
    double A1 = 1e-12, A2 = 0.0;
    std::vector<double> xs(m), ps(m);
    for (std::size_t i = 0; i < m; ++i) {
        xs[i] = avg.bracket_lo +
                (avg.bracket_hi - avg.bracket_lo) * static_cast<double>(i) /
                    static_cast<double>(m - 1);
        ps[i] = prof.psi(xs[i]);
        c1 = std::max(c1, ps[i] + prof.c2 * std::abs(xs[i]));
    }
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(xs[i]) > 1.0)
            A1 = std::max(A1, (-ps[i] - 0.5 * c * xs[i]) / (xs[i] * xs[i]));
    for (std::size_t i = 0; i < m; ++i)
        A2 = std::max(A2, -ps[i] - 0.5 * c * xs[i] - A1 * xs[i] * xs[i]);
    prof.c1 = c1;
    prof.A1 = A1;
    prof.A2 = A2;
    return prof;
}

double psi_second_derivative(const AveragedRate& avg, double x) {
    const double xm = avg.x_m;
    if (x == xm) return -std::sqrt(-avg.abar_dxx_at_xm / 2.0);
    double f = avg.abar_max - avg.abar(x);
    if (f <= 0.0) return -std::sqrt(-avg.abar_dxx_at_xm / 2.0);
    const double ax = avg.abar_dx(x);
    return (x < xm ? -ax : ax) / (2.0 * std::sqrt(f));
}

namespace {

// G(x) = -(1/T) int_0^T int_0^t a_x(e(tau), x) dtau dt + (T/2) abar_x(x).
double G_value(const GrowthRateModel& model, const AveragedRate& avg, double x) {
    const double T = model.period_T;
    const std::size_t nt = 256;
    const double h = T / static_cast<double>(nt);
    std::vector<double> ax(nt + 1);
    for (std::size_t k = 0; k <= nt; ++k) ax[k] = model.dx(h * static_cast<double>(k), x);
    const std::vector<double> cum = quad::cumulative_uniform(ax, h);
    const double dbl = quad::simpson_uniform(cum, h);
    return -dbl / T + 0.5 * T * avg.abar_dx(x);
}

}  // namespace

CorrectorData corrector(const GrowthRateModel& model, const AveragedRate& avg,
                        const HJProfile& profile) {
    if (avg.abar_dxx_at_xm >= -1e-10)
        throw DegenerateCurvature("corrector: abar_xx(x_m) = " +
                                  std::to_string(avg.abar_dxx_at_xm) + " is not negative");

    CorrectorData out;
    out.lambda2 = std::sqrt(-avg.abar_dxx_at_xm / 2.0);

    const double xm = avg.x_m;
    // Escaping closures own their model copy.
    const auto mp = std::make_shared<const GrowthRateModel>(model);
    out.G = [mp, avg](double x) { return G_value(*mp, avg, x); };

    // dphi/dx(0, x): branch formula away from x_m, quadratic blend across a
    // 1e-3 window where the formula cancels catastrophically.
    const double w = 1e-3;
    const double A2xx = avg.abar_dxx_at_xm;  // < 0
    const double limit_at_xm = G_value(model, avg, xm) - avg.abar_dxxx(xm) / (6.0 * A2xx);
    auto branch = [mp, avg, A2xx](double x) {
        const double f = avg.abar_max - avg.abar(x);
        const double ax = avg.abar_dx(x);
        const double root = std::sqrt(std::max(0.0, -2.0 * A2xx * f));
        const double num = x < avg.x_m ? ax - root : ax + root;
        return num / (4.0 * f) + G_value(*mp, avg, x);
    };
    const double v_minus = branch(xm - w), v_plus = branch(xm + w);
    const double slope = (v_plus - v_minus) / (2.0 * w);
    const double curv = (v_plus + v_minus - 2.0 * limit_at_xm) / (2.0 * w * w);
    out.phi_x0 = [branch, xm, w, limit_at_xm, slope, curv](double x) {
        const double u = x - xm;
        if (std::abs(u) >= w) return branch(x);
        return limit_at_xm + slope * u + curv * u * u;
    };

    // D(t) = dphi/dx(t, x_bar) assembled from the time integral of a_x.
    const double T = model.period_T;
    const std::size_t nt = 512;
    const double h = T / static_cast<double>(nt);
    std::vector<double> ax(nt + 1);
    for (std::size_t k = 0; k <= nt; ++k)
        ax[k] = model.dx(h * static_cast<double>(k), profile.x_bar);
    const std::vector<double> cum = quad::cumulative_uniform(ax, h);
    const double phix0_bar = out.phi_x0(profile.x_bar);
    const double abar_x_bar = avg.abar_dx(profile.x_bar);
    out.D.period_T = T;
    out.D.times.resize(nt + 1);
    out.D.values.resize(nt + 1);
    for (std::size_t k = 0; k <= nt; ++k) {
        const double t = h * static_cast<double>(k);
        out.D.times[k] = t;
        out.D.values[k] = phix0_bar + cum[k] - t * abar_x_bar;
    }

    // K = max |dphi/dx|^2 + |d2phi/dx2| over a dense (t, x) grid.
    const double hw = 4.0;
    const std::size_t nx = 512, ntK = 64;
    const double dxK = 2.0 * hw / static_cast<double>(nx);
    std::vector<double> phix_t(nx + 1);
    double K = 0.0;
    for (std::size_t j = 0; j <= ntK; ++j) {
        const double t = T * static_cast<double>(j) / static_cast<double>(ntK);
        for (std::size_t i = 0; i <= nx; ++i) {
            const double x = xm - hw + dxK * static_cast<double>(i);
            const std::size_t ncum = 64;
            const double hc = t > 0.0 ? t / static_cast<double>(ncum) : 0.0;
            double cum_t = 0.0;
            if (t > 0.0) {
                std::vector<double> a_samples(ncum + 1);
                for (std::size_t k = 0; k <= ncum; ++k)
                    a_samples[k] = model.dx(hc * static_cast<double>(k), x);
                cum_t = quad::simpson_uniform(a_samples, hc);
            }
            phix_t[i] = out.phi_x0(x) + cum_t - t * avg.abar_dx(x);
        }
        for (std::size_t i = 1; i < nx; ++i) {
            const double phixx = (phix_t[i + 1] - phix_t[i - 1]) / (2.0 * dxK);
            K = std::max(K, phix_t[i] * phix_t[i] + std::abs(phixx));
        }
    }
    out.K = K;
    return out;
}

TaylorCoefficients taylor_coefficients(const HJProfile& profile) {
    const double h = 0.2;
    const std::size_t m = 81;
    // Scaled basis u^2, u^3, u^4 with u in units of h for conditioning.
    double M[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double b[3] = {0, 0, 0};
    for (std::size_t i = 0; i < m; ++i) {
        const double u = -h + 2.0 * h * static_cast<double>(i) / static_cast<double>(m - 1);
        const double s = u / h;
        const double phi[3] = {s * s, s * s * s, s * s * s * s};
        const double y = profile.psi(profile.x_bar + u);
        for (int r = 0; r < 3; ++r) {
            b[r] += phi[r] * y;
            for (int c2 = 0; c2 < 3; ++c2) M[r][c2] += phi[r] * phi[c2];
        }
    }
    // Gaussian elimination on the 3x3 normal system.
    for (int k = 0; k < 3; ++k) {
        int piv = k;
        for (int r = k + 1; r < 3; ++r)
            if (std::abs(M[r][k]) > std::abs(M[piv][k])) piv = r;
        std::swap(M[k], M[piv]);
        std::swap(b[k], b[piv]);
        for (int r = k + 1; r < 3; ++r) {
            const double f = M[r][k] / M[k][k];
            for (int c2 = k; c2 < 3; ++c2) M[r][c2] -= f * M[k][c2];
            b[r] -= f * b[k];
        }
    }
    double coef[3];
    for (int k = 2; k >= 0; --k) {
        double s = b[k];
        for (int c2 = k + 1; c2 < 3; ++c2) s -= M[k][c2] * coef[c2];
        coef[k] = s / M[k][k];
    }
    TaylorCoefficients tc;
    tc.A = -2.0 * coef[0] / (h * h);
    tc.B = coef[1] / (h * h * h);
    tc.C = coef[2] / (h * h * h * h);
    return tc;
}

AsymptoticReport expansion_report(const AveragedRate& avg, double c,
                                  const std::vector<double>& epsilon_list) {
    if (avg.abar_dxx_at_xm >= -1e-10)
        throw DegenerateCurvature("expansion_report: degenerate curvature at x_m");
    AsymptoticReport rep;
    rep.x_m = avg.x_m;
    rep.x_bar = solve_xbar(avg, c);
    rep.lambda2 = std::sqrt(-avg.abar_dxx_at_xm / 2.0);
    rep.rho_bar_limit = avg.abar_max - 0.25 * c * c;
    rep.cstar_limit = 2.0 * std::sqrt(avg.abar_max);
    const double cstar_slope = std::sqrt(-avg.abar_dxx_at_xm / (2.0 * avg.abar_max));
    for (const double eps : epsilon_list) {
        ExpansionEntry e;
        e.epsilon = eps;
        e.rho_bar_predicted = rep.rho_bar_limit - eps * rep.lambda2;
        e.cstar_predicted = rep.cstar_limit - eps * cstar_slope;
        rep.entries.push_back(e);
    }
    return rep;
}

MomentReport measure_moments(const Trajectory& traj, const Grid1D& grid, double epsilon,
                             double x_bar, const CorrectorData& corr,
                             const TaylorCoefficients& taylor) {
    if (traj.verdict != Verdict::Periodic || traj.cycle.empty())
        throw ValidationError("measure_moments: trajectory has no converged periodic cycle");
    const std::size_t nt = traj.cycle.size();
    const double t0 = traj.cycle.front().time;

    MomentReport rep;
    rep.var_predicted = epsilon / taylor.A;
    const double mean_shift = 3.0 * taylor.B / (taylor.A * taylor.A);

    auto& mu = rep.mu_measured;
    auto& var = rep.var_measured;
    auto& mup = rep.mu_predicted;
    const double T = traj.cycle.back().time - t0;
    mu.period_T = var.period_T = mup.period_T = T;
    mu.times.resize(nt);
    mu.values.resize(nt);
    var.times.resize(nt);
    var.values.resize(nt);
    mup.times.resize(nt);
    mup.values.resize(nt);

    std::vector<double> work(grid.n_points);
    for (std::size_t k = 0; k < nt; ++k) {
        const PdeState& s = traj.cycle[k];
        const double t = s.time - t0;
        for (std::size_t i = 0; i < grid.n_points; ++i) work[i] = grid.nodes[i] * s.density[i];
        const double mean = integrate(grid, work) / s.mass_rho;
        for (std::size_t i = 0; i < grid.n_points; ++i) {
            const double d = grid.nodes[i] - mean;
            work[i] = d * d * s.density[i];
        }
        const double v = integrate(grid, work) / s.mass_rho;
        mu.times[k] = var.times[k] = mup.times[k] = t;
        mu.values[k] = mean;
        var.values[k] = v;
        mup.values[k] = x_bar + epsilon * (mean_shift + corr.D(t) / taylor.A);
        rep.mu_max_gap = std::max(rep.mu_max_gap, std::abs(mean - mup.values[k]));
        rep.var_max_gap = std::max(rep.var_max_gap, std::abs(v - rep.var_predicted));
    }
    rep.mu_mean_measured = mu.mean();
    rep.mu_mean_predicted = mup.mean();
    return rep;
}

namespace {

CaseScenarioResult quadratic_case_result(QuadraticRateParams& params, double c, double epsilon,
                                         const CaseSolverOptions* solver) {
    GrowthRateModel model = quadratic_model(params);
    CaseScenarioResult res;
    const double peak = params.r + params.g1 * params.g1 / params.gbar - params.g2;
    res.rho_bar_formula = peak - 0.25 * c * c - epsilon * std::sqrt(params.gbar);
    res.mu_mean_formula = params.g1 / params.gbar - 0.5 * c / std::sqrt(params.gbar);
    res.cstar_formula =
        2.0 * std::sqrt(peak) - epsilon * std::sqrt(params.gbar / peak);
    if (solver) {
        const double sigma = epsilon * epsilon;
        const FloquetEigenpair eig =
            principal_eigenpair(model, sigma, c * epsilon, solver->grid,
                                solver->steps_per_period, solver->tol, solver->max_iters);
        res.rho_bar_solver = -eig.lambda;
        res.cstar_solver = critical_speed(model, sigma, solver->grid, solver->steps_per_period,
                                          solver->tol, solver->max_iters) /
                           epsilon;
        res.has_solver = true;
    }
    return res;
}

}  // namespace

CaseComparison case_comparison(QuadraticRateParams params_periodic,
                               QuadraticRateParams params_constant, double c, double epsilon,
                               const CaseSolverOptions* solver) {
    CaseComparison cmp;
    cmp.periodic = quadratic_case_result(params_periodic, c, epsilon, solver);
    cmp.constant = quadratic_case_result(params_constant, c, epsilon, solver);
    cmp.rho_gap_formula = cmp.periodic.rho_bar_formula - cmp.constant.rho_bar_formula;
    cmp.cstar_gap_formula = cmp.periodic.cstar_formula - cmp.constant.cstar_formula;
    if (solver) {
        cmp.rho_gap_solver = cmp.periodic.rho_bar_solver - cmp.constant.rho_bar_solver;
        cmp.cstar_gap_solver = cmp.periodic.cstar_solver - cmp.constant.cstar_solver;
    }
    return cmp;
}

}  // namespace evoshift
