#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace evoshift {

using TimeFn = std::function<double(double)>;
using TraitFn = std::function<double(double)>;
using RateFn = std::function<double(double, double)>;  // (t, x)

// Periodic fitness landscape a(e(t), x). The environment enters only through
// the composition with e(t), so time dependence is stored directly.
struct GrowthRateModel {
    double period_T = 1.0;
    RateFn rate;  // T-periodic in t
    // Analytic x-derivatives when available; empty means finite-difference fallback.
    RateFn rate_dx;
    RateFn rate_dxx;
    RateFn rate_dxxx;
    double sup_bound_d0 = 0.0;  // |a| <= d0 on the working domain (H1)

    double dx(double t, double x) const;
    double dxx(double t, double x) const;
    double dxxx(double t, double x) const;
};

// Time average abar(x) = (1/T) int_0^T a(e(t), x) dt and its maximizer.
struct AveragedRate {
    TraitFn abar;
    TraitFn abar_dx;
    TraitFn abar_dxx;
    TraitFn abar_dxxx;
    double x_m = 0.0;        // unique maximizer (H2b)
    double abar_max = 0.0;   // abar(x_m), > 0 under (H2a)
    double abar_dxx_at_xm = 0.0;  // <= 0
    double bracket_lo = 0.0;      // search bracket used to locate x_m
    double bracket_hi = 0.0;
    bool unique_max = true;  // second-best local maximum lower by > 1e-8
};

// Parameters of the quadratic family a(e,x) = r - g(e)(x - theta(e))^2.
struct QuadraticRateParams {
    double r = 1.0;
    TimeFn g;      // selection pressure g(e(t)) > 0
    TimeFn theta;  // optimal trait theta(e(t))
    double period_T = 1.0;
    // Period averages of g, g*theta, g*theta^2; filled by quadratic_model.
    double gbar = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
};

// Constants of the tail hypothesis (Hc).
struct TailHypothesis {
    double delta = 0.05;
    double R0 = 2.0;
};

struct HypothesisCheck {
    bool pass = true;
    double worst_t = 0.0;
    double worst_x = 0.0;
    double margin = 0.0;  // signed slack; negative means violated
};

struct HypothesisReport {
    HypothesisCheck h1_periodicity;
    HypothesisCheck h1_bound;
    HypothesisCheck h2a_positive_max;
    HypothesisCheck h2b_unique_max;
    HypothesisCheck hc_tail;
    bool all_pass() const {
        return h1_periodicity.pass && h1_bound.pass && h2a_positive_max.pass &&
               h2b_unique_max.pass && hc_tail.pass;
    }
};

// Builds the time average of `model` by composite Simpson over one period and
// locates x_m inside [x_lo, x_hi] (golden section refined by derivative bisection).
// Throws NoInteriorMaximum if the maximizer sits on the bracket boundary,
// NonPositiveMaximum if abar(x_m) <= 0.
AveragedRate averaged_rate(const GrowthRateModel& model, std::size_t quadrature_points,
                           double x_lo, double x_hi);

// The quadratic family with exact derivatives. Throws NonPositivePressure if
// min g <= 0 on the period. Fills the period averages of `params`.
GrowthRateModel quadratic_model(QuadraticRateParams& params);

// Closed-form average of the quadratic family: abar(x) = r - x^2 gbar + 2 x g1 - g2.
// Requires params with the averages already filled (i.e. after quadratic_model).
AveragedRate quadratic_average(const QuadraticRateParams& params);

// A-posteriori hypothesis check for a computed eigenvalue lambda; diagnostic only.
// Samples (t, x) on [0,T] x [x_lo, x_hi].
HypothesisReport check_hypotheses(const GrowthRateModel& model, const AveragedRate& avg,
                                  double lambda, const TailHypothesis& tail,
                                  double x_lo, double x_hi);

// Sampled sup of |a| over [0,T] x [x_lo, x_hi]; use to pin d0 to a working domain.
double measured_sup_bound(const GrowthRateModel& model, double x_lo, double x_hi);

}  // namespace evoshift
