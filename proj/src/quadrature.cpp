#include "evoshift/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace evoshift::quad {

double simpson_uniform(const std::vector<double>& values, double h) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    std::size_t intervals = n - 1;
    double total = 0.0;
    std::size_t i = 0;
    while (intervals >= 2) {
        total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        i += 2;
        intervals -= 2;
    }
    if (intervals == 1) total += 0.5 * h * (values[n - 2] + values[n - 1]);
    return total;
}

std::vector<double> cumulative_uniform(const std::vector<double>& values, double h) {
    const std::size_t n = values.size();
    std::vector<double> cum(n, 0.0);
    if (n < 2) return cum;
    if (n == 2) {
        cum[1] = 0.5 * h * (values[0] + values[1]);
        return cum;
    }
    // Simpson pairs: the odd endpoint uses the quadratic through the pair.
    for (std::size_t i = 0; i + 2 < n; i += 2) {
        cum[i + 1] = cum[i] + h / 12.0 * (5.0 * values[i] + 8.0 * values[i + 1] - values[i + 2]);
        cum[i + 2] = cum[i] + h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if (n % 2 == 0) {  // one interval left over; reuse the previous quadratic
        const std::size_t i = n - 3;
        cum[n - 1] = cum[i] + h / 12.0 * (-values[i] + 8.0 * values[i + 1] + 5.0 * values[i + 2]);
    }
    return cum;
}

namespace {

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double trapezoid(const std::vector<double>& values, double h) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double total = 0.5 * (values[0] + values[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) total += values[i];
    return total * h;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol) {
    double fl = f(lo), fh = f(hi);
    if (fl == 0.0) return lo;
    if (fh == 0.0) return hi;
    if (fl * fh > 0.0) throw std::invalid_argument("bisect_root: no sign change in bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (fl * fm < 0.0) {
            hi = mid;
            fh = fm;
        } else {
            lo = mid;
            fl = fm;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace evoshift::quad
