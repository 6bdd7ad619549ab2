#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace evoshift::quad {

// Composite Simpson over [a, b] with n subintervals (n rounded up to even).
template <class F>
double simpson(F&& f, double a, double b, std::size_t n) {
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f(a + h * static_cast<double>(i));
    for (std::size_t i = 2; i < n; i += 2) even += f(a + h * static_cast<double>(i));
    return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

// Composite Simpson on uniformly tabulated values (values.size() - 1 intervals).
// Falls back to a trapezoid on the last interval when the count is odd.
double simpson_uniform(const std::vector<double>& values, double h);

// Cumulative integral F_k = int_0^{t_k} of uniformly tabulated values,
// piecewise-quadratic (Simpson pair) reconstruction, 4th order.
std::vector<double> cumulative_uniform(const std::vector<double>& values, double h);

// Adaptive Simpson to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

double trapezoid(const std::vector<double>& values, double h);

// Maximizer of f on [lo, hi] by golden-section search, |interval| <= tol.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol);

// Root of f in [lo, hi] (f(lo), f(hi) of opposite signs), |interval| <= tol.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol);

}  // namespace evoshift::quad
