#include "evoshift/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evoshift/errors.hpp"
#include "evoshift/pde.hpp"
#include "evoshift/quadrature.hpp"

namespace evoshift {

double PeriodicTable::operator()(double t) const {
    const std::size_t N = times.size() - 1;
    double s = std::fmod(t, period_T);
    if (s < 0.0) s += period_T;
    const double h = period_T / static_cast<double>(N);
    std::size_t k = std::min(static_cast<std::size_t>(s / h), N - 1);
    const double w = (s - times[k]) / h;
    return (1.0 - w) * values[k] + w * values[k + 1];
}

double PeriodicTable::mean() const {
    const double h = period_T / static_cast<double>(times.size() - 1);
    return quad::simpson_uniform(values, h) / period_T;
}

namespace {

bool liouville_preferred(double c_tilde, double sigma, double R) {
    return c_tilde != 0.0 && std::abs(c_tilde) / (2.0 * sigma) * R <= 40.0;
}

// One-period solution operator of the linear equation. With the Liouville
// path the iteration runs entirely in transformed space; the transform is a
// diagonal positive map so it commutes with convergence checks.
class Monodromy {
public:
    Monodromy(const GrowthRateModel& model, double sigma, double c_tilde, const Grid1D& grid,
              std::size_t spp)
        : grid_(grid),
          liouville_(liouville_preferred(c_tilde, sigma, grid.R)),
          cache_(model, sigma, liouville_ ? 0.0 : c_tilde, grid, spp,
                 liouville_ ? -c_tilde * c_tilde / (4.0 * sigma) : 0.0),
          c_tilde_(c_tilde),
          sigma_(sigma),
          spp_(spp) {}

    bool liouville() const { return liouville_; }

    // Full period sweep in iteration space, in place.
    void sweep(std::vector<double>& v) const {
        for (std::size_t k = 0; k < spp_; ++k) cache_.step(v, k);
    }

    std::vector<double> to_iteration_space(const std::vector<double>& v) const {
        if (!liouville_) return v;
        LinearState s{0.0, v};
        return liouville_forward(s, c_tilde_, sigma_, grid_).values;
    }

    std::vector<double> from_iteration_space(const std::vector<double>& v) const {
        if (!liouville_) return v;
        LinearState s{0.0, v};
        return liouville_backward(s, c_tilde_, sigma_, grid_).values;
    }

    void step_one(std::vector<double>& v, std::size_t k) const { cache_.step(v, k); }

private:
    const Grid1D& grid_;
    bool liouville_;
    LinearStepCache cache_;
    double c_tilde_;
    double sigma_;
    std::size_t spp_;
};

}  // namespace

std::vector<double> monodromy_apply(const std::vector<double>& v, const GrowthRateModel& model,
                                    double sigma, double c_tilde, const Grid1D& grid,
                                    std::size_t steps_per_period) {
    const Monodromy M(model, sigma, c_tilde, grid, steps_per_period);
    std::vector<double> w = M.to_iteration_space(v);
    M.sweep(w);
    return M.from_iteration_space(w);
}

FloquetEigenpair principal_eigenpair(const GrowthRateModel& model, double sigma, double c_tilde,
                                     const Grid1D& grid, std::size_t steps_per_period,
                                     double tol, std::size_t max_iters) {
    if (!(tol > 0.0)) throw ValidationError("principal_eigenpair: tol must be positive");
    const std::size_t n = grid.n_points;
    const double T = model.period_T;
    const Monodromy M(model, sigma, c_tilde, grid, steps_per_period);

    std::vector<double> v(n, 1.0);
    v.front() = 0.0;
    v.back() = 0.0;
    v = M.to_iteration_space(v);
    double vmax = *std::max_element(v.begin(), v.end());
    for (double& x : v) x /= vmax;

    double mu = 1.0, log_mu_prev = std::numeric_limits<double>::quiet_NaN();
    std::size_t iters = 0;
    bool converged = false;
    std::vector<double> w;
    while (iters < max_iters) {
        w = v;
        M.sweep(w);
        ++iters;

        double wmin = w[1], wmax = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            wmin = std::min(wmin, w[i]);
            wmax = std::max(wmax, w[i]);
        }
        if (wmin < 0.0)
            throw DegenerateMode("principal_eigenpair: iterate changed sign (min " +
                                 std::to_string(wmin) + ")");
        if (!(wmax > 0.0))
            throw DegenerateMode("principal_eigenpair: iterate vanished");

        // Growth factor from a positive linear functional (the discrete mass).
        mu = integrate(grid, w) / integrate(grid, v);
        const double log_mu = std::log(mu);

        double vec_change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wn = w[i] / wmax;
            vec_change = std::max(vec_change, std::abs(wn - v[i]));
            v[i] = wn;
        }
        if (std::isfinite(log_mu_prev)) {
            const double rel = std::abs(log_mu - log_mu_prev) / std::max(1.0, std::abs(log_mu));
            if (rel < tol && vec_change < 1e-8) {
                converged = true;
                break;
            }
        }
        log_mu_prev = log_mu;
    }
    if (!converged)
        throw NoConvergence("principal_eigenpair: no convergence after " +
                            std::to_string(iters) + " iterations");

    const double lambda = -std::log(mu) / T;

    FloquetEigenpair eig;
    eig.lambda = lambda;
    eig.growth_factor = mu;
    eig.iterations = iters;
    eig.used_liouville = M.liouville();

    // Final sweep: snapshots p(t_k) = m(t_k) exp(lambda t_k), back-transformed.
    const double dt = T / static_cast<double>(steps_per_period);
    eig.times.resize(steps_per_period + 1);
    eig.eigenfunction.resize(steps_per_period + 1);
    std::vector<double> m = v;
    eig.times[0] = 0.0;
    eig.eigenfunction[0] = M.from_iteration_space(m);
    for (std::size_t k = 0; k < steps_per_period; ++k) {
        M.step_one(m, k);
        const double t = dt * static_cast<double>(k + 1);
        eig.times[k + 1] = t;
        std::vector<double> p = M.from_iteration_space(m);
        const double scale = std::exp(lambda * t);
        for (double& x : p) x *= scale;
        eig.eigenfunction[k + 1] = std::move(p);
    }
    double sup0 = 0.0;
    for (const double x : eig.eigenfunction[0]) sup0 = std::max(sup0, x);
    for (auto& snap : eig.eigenfunction)
        for (double& x : snap) x /= sup0;

    // Residual of the eigen-PDE with central differences on the snapshots.
    double res = 0.0;
    for (std::size_t k = 1; k + 1 < eig.times.size(); ++k) {
        const auto& pm = eig.eigenfunction[k - 1];
        const auto& p0 = eig.eigenfunction[k];
        const auto& pp = eig.eigenfunction[k + 1];
        const double t = eig.times[k];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double pt = (pp[i] - pm[i]) / (2.0 * dt);
            const double px = (p0[i + 1] - p0[i - 1]) / (2.0 * grid.dx);
            const double pxx = (p0[i + 1] - 2.0 * p0[i] + p0[i - 1]) / (grid.dx * grid.dx);
            const double r = pt - c_tilde * px - sigma * pxx -
                             model.rate(t, grid.nodes[i]) * p0[i] - lambda * p0[i];
            res = std::max(res, std::abs(r));
        }
    }
    eig.residual = res;
    return eig;
}

double critical_speed(const GrowthRateModel& model, double sigma, const Grid1D& grid,
                      std::size_t steps_per_period, double tol, std::size_t max_iters) {
    const FloquetEigenpair eig =
        principal_eigenpair(model, sigma, 0.0, grid, steps_per_period, tol, max_iters);
    if (eig.lambda >= 0.0) return 0.0;
    return 2.0 * std::sqrt(-sigma * eig.lambda);
}

PeriodicTable periodic_logistic_from_table(const std::vector<double>& growth, double T) {
    const std::size_t N = growth.size() - 1;
    const double h = T / static_cast<double>(N);
    const std::vector<double> F = quad::cumulative_uniform(growth, h);
    const double IQ = F.back();
    if (!(IQ > 0.0))
        throw NonviablePopulation("periodic_logistic: int growth = " + std::to_string(IQ) +
                                  " <= 0");
    std::vector<double> H(N + 1);
    for (std::size_t k = 0; k <= N; ++k) H[k] = std::exp(F[k]);
    const std::vector<double> S = quad::cumulative_uniform(H, h);
    const double ST = S.back();
    const double eIQ = std::exp(IQ);

    PeriodicTable rho;
    rho.period_T = T;
    rho.times.resize(N + 1);
    rho.values.resize(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        rho.times[k] = h * static_cast<double>(k);
        rho.values[k] = (eIQ - 1.0) * H[k] / (ST - S[k] + eIQ * S[k]);
    }
    // rho(0) == rho(T) holds exactly by construction of the formula.
    return rho;
}

PeriodicTable periodic_logistic(const TimeFn& growth, double T, std::size_t n_samples) {
    if (n_samples % 2 != 0) ++n_samples;
    std::vector<double> g(n_samples + 1);
    for (std::size_t k = 0; k <= n_samples; ++k)
        g[k] = growth(T * static_cast<double>(k) / static_cast<double>(n_samples));
    return periodic_logistic_from_table(g, T);
}

PeriodicQuantities periodic_quantities(const FloquetEigenpair& eig, const GrowthRateModel& model,
                                       const Grid1D& grid) {
    const std::size_t nt = eig.times.size();
    PeriodicQuantities out;
    out.Qc.period_T = model.period_T;
    out.Qc.times = eig.times;
    out.Qc.values.resize(nt);
    out.Pc.resize(nt);
    std::vector<double> ap(grid.n_points);
    for (std::size_t k = 0; k < nt; ++k) {
        const auto& p = eig.eigenfunction[k];
        const double Ip = integrate(grid, p);
        for (std::size_t i = 0; i < grid.n_points; ++i)
            ap[i] = model.rate(eig.times[k], grid.nodes[i]) * p[i];
        out.Qc.values[k] = integrate(grid, ap) / Ip;
        out.Pc[k] = p;
        for (double& x : out.Pc[k]) x /= Ip;
    }
    const double h = model.period_T / static_cast<double>(nt - 1);
    out.int_Qc = quad::simpson_uniform(out.Qc.values, h);
    if (!(out.int_Qc > 0.0))
        throw NonviablePopulation("periodic_quantities: int Q_c = " +
                                  std::to_string(out.int_Qc) + " <= 0");
    out.rho_hat = periodic_logistic_from_table(out.Qc.values, model.period_T);
    return out;
}

TailDecayReport decay_tail_check(const FloquetEigenpair& eig, const TailHypothesis& tail,
                                 double sigma, double c_tilde, const Grid1D& grid,
                                 double margin) {
    TailDecayReport rep;
    const double cs = c_tilde / sigma;
    rep.nu = -0.5 * cs + std::sqrt(tail.delta / sigma + 0.5 * cs * cs);

    const auto& p0 = eig.eigenfunction.front();
    const auto fit_side = [&](bool right) {
        // Least-squares slope of log p against |x| on R0 <= |x| <= R - 1.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        std::size_t m = 0;
        for (std::size_t i = 0; i < grid.n_points; ++i) {
            const double x = grid.nodes[i];
            if (right && (x < tail.R0 || x > grid.R - 1.0)) continue;
            if (!right && (-x < tail.R0 || -x > grid.R - 1.0)) continue;
            if (p0[i] < 1e-280) continue;
            const double ax = std::abs(x), ly = std::log(p0[i]);
            sx += ax;
            sy += ly;
            sxx += ax * ax;
            sxy += ax * ly;
            ++m;
        }
        if (m < 2) return -std::numeric_limits<double>::infinity();
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        return (static_cast<double>(m) * sxy - sx * sy) / denom;
    };
    rep.slope_left = fit_side(false);
    rep.slope_right = fit_side(true);
    rep.pass = rep.slope_left <= -rep.nu + margin && rep.slope_right <= -rep.nu + margin;
    return rep;
}

}  // namespace evoshift
