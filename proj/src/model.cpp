#include "evoshift/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "evoshift/errors.hpp"
#include "evoshift/quadrature.hpp"

namespace evoshift {

namespace {

double fd_step(double x) { return std::max(1e-5, 1e-5 * std::abs(x)); }

}  // namespace

double GrowthRateModel::dx(double t, double x) const {
    if (rate_dx) return rate_dx(t, x);
    const double h = fd_step(x);
    return (rate(t, x + h) - rate(t, x - h)) / (2.0 * h);
}

double GrowthRateModel::dxx(double t, double x) const {
    if (rate_dxx) return rate_dxx(t, x);
    const double h = fd_step(x);
    return (rate(t, x + h) - 2.0 * rate(t, x) + rate(t, x - h)) / (h * h);
}

double GrowthRateModel::dxxx(double t, double x) const {
    if (rate_dxxx) return rate_dxxx(t, x);
    const double h = 10.0 * fd_step(x);
    return (rate(t, x + 2.0 * h) - 2.0 * rate(t, x + h) + 2.0 * rate(t, x - h) -
            rate(t, x - 2.0 * h)) /
           (2.0 * h * h * h);
}

AveragedRate averaged_rate(const GrowthRateModel& model, std::size_t quadrature_points,
                           double x_lo, double x_hi) {
    if (quadrature_points < 16) quadrature_points = 16;
    const double T = model.period_T;
    const std::size_t nq = quadrature_points;

    // The returned closures outlive the caller's model; they own a copy.
    const auto mp = std::make_shared<const GrowthRateModel>(model);
    auto abar = [mp, T, nq](double x) {
        return quad::simpson([&](double t) { return mp->rate(t, x); }, 0.0, T, nq) / T;
    };
    auto abar_dx = [mp, T, nq](double x) {
        return quad::simpson([&](double t) { return mp->dx(t, x); }, 0.0, T, nq) / T;
    };
    auto abar_dxx = [mp, T, nq](double x) {
        return quad::simpson([&](double t) { return mp->dxx(t, x); }, 0.0, T, nq) / T;
    };
    auto abar_dxxx = [mp, T, nq](double x) {
        return quad::simpson([&](double t) { return mp->dxxx(t, x); }, 0.0, T, nq) / T;
    };

    // Dense scan to find the global maximum basin (golden section alone can
    // settle on a secondary local maximum) and to assert (H2b).
    const std::size_t scan_n = 1024;
    std::vector<double> xs(scan_n + 1), vals(scan_n + 1);
    for (std::size_t i = 0; i <= scan_n; ++i) {
        xs[i] = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(scan_n);
        vals[i] = abar(xs[i]);
    }
    std::size_t best_i = 0;
    for (std::size_t i = 1; i <= scan_n; ++i)
        if (vals[i] > vals[best_i]) best_i = i;

    bool unique_max = true;
    double second_best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < scan_n; ++i) {
        if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && i != best_i &&
            (i + 1 < best_i || i > best_i + 1))
            second_best = std::max(second_best, vals[i]);
    }
    if (std::isfinite(second_best) && second_best >= vals[best_i] - 1e-8) unique_max = false;

    const double span = x_hi - x_lo;
    double lo = best_i == 0 ? x_lo : xs[best_i - 1];
    double hi = best_i == scan_n ? x_hi : xs[best_i + 1];
    double x_m = quad::golden_section_max(abar, lo, hi, 1e-12 * std::max(1.0, span));

    // Refine with bisection on the derivative when a sign change brackets x_m.
    {
        const double h = 1e-6 * std::max(1.0, span);
        const double dlo = abar_dx(std::max(x_lo, x_m - h));
        const double dhi = abar_dx(std::min(x_hi, x_m + h));
        if (dlo > 0.0 && dhi < 0.0) {
            x_m = quad::bisect_root(abar_dx, std::max(x_lo, x_m - h), std::min(x_hi, x_m + h),
                                    1e-14 * std::max(1.0, span));
        }
    }

    const double edge_tol = 1e-6 * std::max(1.0, span);
    if (x_m - x_lo < edge_tol || x_hi - x_m < edge_tol)
        throw NoInteriorMaximum("averaged_rate: maximizer at bracket boundary x=" +
                                std::to_string(x_m));

    const double abar_max = abar(x_m);
    if (abar_max <= 0.0)
        throw NonPositiveMaximum("averaged_rate: abar(x_m)=" + std::to_string(abar_max) +
                                 " <= 0 violates (H2a)");

    double curv;
    if (model.rate_dxx) {
        curv = abar_dxx(x_m);
    } else {
        // 4th-order central second difference of abar.
        const double h = 1e-3 * std::max(1.0, span);
        curv = (-abar(x_m + 2.0 * h) + 16.0 * abar(x_m + h) - 30.0 * abar_max +
                16.0 * abar(x_m - h) - abar(x_m - 2.0 * h)) /
               (12.0 * h * h);
    }

    AveragedRate out;
    out.abar = abar;
    out.abar_dx = abar_dx;
    out.abar_dxx = abar_dxx;
    out.abar_dxxx = abar_dxxx;
    out.x_m = x_m;
    out.abar_max = abar_max;
    out.abar_dxx_at_xm = curv;
    out.bracket_lo = x_lo;
    out.bracket_hi = x_hi;
    out.unique_max = unique_max;
    return out;
}

GrowthRateModel quadratic_model(QuadraticRateParams& params) {
    const double T = params.period_T;
    const std::size_t nq = 512;

    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= nq; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(nq);
        gmin = std::min(gmin, params.g(t));
    }
    if (gmin <= 0.0)
        throw NonPositivePressure("quadratic_model: min g = " + std::to_string(gmin) + " <= 0");

    auto g = params.g;
    auto th = params.theta;
    params.gbar = quad::simpson(g, 0.0, T, nq) / T;
    params.g1 = quad::simpson([&g, &th](double t) { return g(t) * th(t); }, 0.0, T, nq) / T;
    params.g2 =
        quad::simpson([&g, &th](double t) { return g(t) * th(t) * th(t); }, 0.0, T, nq) / T;

    GrowthRateModel m;
    m.period_T = T;
    const double r = params.r;
    m.rate = [r, g, th](double t, double x) {
        const double d = x - th(t);
        return r - g(t) * d * d;
    };
    m.rate_dx = [g, th](double t, double x) { return -2.0 * g(t) * (x - th(t)); };
    m.rate_dxx = [g](double t, double) { return -2.0 * g(t); };
    m.rate_dxxx = [](double, double) { return 0.0; };
    m.sup_bound_d0 = std::abs(r);  // valid near the optimum; grows off-domain
    return m;
}

AveragedRate quadratic_average(const QuadraticRateParams& params) {
    const double r = params.r, gbar = params.gbar, g1 = params.g1, g2 = params.g2;
    AveragedRate out;
    out.abar = [r, gbar, g1, g2](double x) { return r - x * x * gbar + 2.0 * x * g1 - g2; };
    out.abar_dx = [gbar, g1](double x) { return -2.0 * x * gbar + 2.0 * g1; };
    out.abar_dxx = [gbar](double) { return -2.0 * gbar; };
    out.abar_dxxx = [](double) { return 0.0; };
    out.x_m = g1 / gbar;
    out.abar_max = r + g1 * g1 / gbar - g2;
    out.abar_dxx_at_xm = -2.0 * gbar;
    out.bracket_lo = out.x_m - 10.0;
    out.bracket_hi = out.x_m + 10.0;
    out.unique_max = true;
    if (out.abar_max <= 0.0)
        throw NonPositiveMaximum("quadratic_average: abar(x_m)=" + std::to_string(out.abar_max) +
                                 " <= 0 violates (H2a)");
    return out;
}

HypothesisReport check_hypotheses(const GrowthRateModel& model, const AveragedRate& avg,
                                  double lambda, const TailHypothesis& tail,
                                  double x_lo, double x_hi) {
    HypothesisReport rep;
    const double T = model.period_T;
    const std::size_t nt = 64, nx = 256;

    // (H1) periodicity: a(t, x) == a(t + T, x) on samples.
    rep.h1_periodicity.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= nt; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(nt);
        for (std::size_t j = 0; j <= nx; ++j) {
            const double x = x_lo + (x_hi - x_lo) * static_cast<double>(j) / static_cast<double>(nx);
            const double gap = std::abs(model.rate(t, x) - model.rate(t + T, x));
            const double slack = 1e-12 * std::max(1.0, std::abs(model.rate(t, x))) - gap;
            if (slack < rep.h1_periodicity.margin) {
                rep.h1_periodicity.margin = slack;
                rep.h1_periodicity.worst_t = t;
                rep.h1_periodicity.worst_x = x;
            }
        }
    }
    rep.h1_periodicity.pass = rep.h1_periodicity.margin >= 0.0;

    // (H1) magnitude bound |a| <= d0.
    rep.h1_bound.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= nt; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(nt);
        for (std::size_t j = 0; j <= nx; ++j) {
            const double x = x_lo + (x_hi - x_lo) * static_cast<double>(j) / static_cast<double>(nx);
            const double slack = model.sup_bound_d0 - std::abs(model.rate(t, x));
            if (slack < rep.h1_bound.margin) {
                rep.h1_bound.margin = slack;
                rep.h1_bound.worst_t = t;
                rep.h1_bound.worst_x = x;
            }
        }
    }
    rep.h1_bound.pass = rep.h1_bound.margin >= 0.0;

    // (H2a), (H2b)
    rep.h2a_positive_max.pass = avg.abar_max > 0.0;
    rep.h2a_positive_max.worst_x = avg.x_m;
    rep.h2a_positive_max.margin = avg.abar_max;
    rep.h2b_unique_max.pass = avg.unique_max;
    rep.h2b_unique_max.worst_x = avg.x_m;

    // (Hc): a(e(t), x) + lambda <= -delta for |x| >= R0 (checked a-posteriori).
    rep.hc_tail.margin = std::numeric_limits<double>::infinity();
    const double xr = std::max(std::abs(x_lo), std::abs(x_hi));
    for (std::size_t i = 0; i <= nt; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(nt);
        for (std::size_t j = 0; j <= nx; ++j) {
            const double ax = tail.R0 + (xr - tail.R0) * static_cast<double>(j) /
                                            static_cast<double>(nx);
            for (const double x : {ax, -ax}) {
                const double slack = -tail.delta - (model.rate(t, x) + lambda);
                if (slack < rep.hc_tail.margin) {
                    rep.hc_tail.margin = slack;
                    rep.hc_tail.worst_t = t;
                    rep.hc_tail.worst_x = x;
                }
            }
        }
    }
    rep.hc_tail.pass = rep.hc_tail.margin >= 0.0;
    return rep;
}

double measured_sup_bound(const GrowthRateModel& model, double x_lo, double x_hi) {
    const std::size_t nt = 128, nx = 512;
    double sup = 0.0;
    for (std::size_t i = 0; i <= nt; ++i) {
        const double t = model.period_T * static_cast<double>(i) / static_cast<double>(nt);
        for (std::size_t j = 0; j <= nx; ++j) {
            const double x =
                x_lo + (x_hi - x_lo) * static_cast<double>(j) / static_cast<double>(nx);
            sup = std::max(sup, std::abs(model.rate(t, x)));
        }
    }
    return sup;
}

}  // namespace evoshift
