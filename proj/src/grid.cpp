#include "evoshift/grid.hpp"

#include <cmath>
#include <string>

#include "evoshift/errors.hpp"
#include "evoshift/quadrature.hpp"

namespace evoshift {

Grid1D::Grid1D(double radius, std::size_t n) : R(radius), n_points(n) {
    if (!(radius > 0.0) || n < 2)
        throw InvalidGrid("Grid1D: need R > 0 and n_points >= 2");
    dx = 2.0 * R / static_cast<double>(n - 1);
    nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = -R + dx * static_cast<double>(i);
    nodes.front() = -R;
    nodes.back() = R;
}

Grid1D build_grid(double R, std::size_t n_points) {
    if (!(R > 0.0))
        throw InvalidGrid("build_grid: R must be positive, got " + std::to_string(R));
    if (n_points < 64)
        throw InvalidGrid("build_grid: n_points must be >= 64, got " +
                          std::to_string(n_points));
    return Grid1D(R, n_points);
}

double integrate(const Grid1D& grid, const std::vector<double>& values) {
    return quad::trapezoid(values, grid.dx);
}

std::vector<double> TridiagonalOperator::apply(const std::vector<double>& v) const {
    const std::size_t n = size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = lower[i] * v[i - 1] + diag[i] * v[i] + upper[i] * v[i + 1];
    if (n >= 1) out[0] = diag[0] * v[0];
    if (n >= 2) out[n - 1] = diag[n - 1] * v[n - 1];
    return out;
}

TridiagonalOperator advection_diffusion_operator(const Grid1D& grid, double drift,
                                                 double diffusivity,
                                                 const std::vector<double>& reaction) {
    if (!(diffusivity > 0.0)) throw InvalidGrid("advection_diffusion_operator: diffusivity <= 0");
    const std::size_t n = grid.n_points;
    const double dx = grid.dx;
    TridiagonalOperator A;
    A.lower.assign(n, 0.0);
    A.diag.assign(n, 0.0);
    A.upper.assign(n, 0.0);

    const double sdx2 = diffusivity / (dx * dx);
    const double peclet = std::abs(drift) * dx / (2.0 * diffusivity);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        A.lower[i] = sdx2;
        A.diag[i] = -2.0 * sdx2;
        A.upper[i] = sdx2;
        if (drift != 0.0) {
            if (peclet < 1.0) {
                A.lower[i] -= drift / (2.0 * dx);
                A.upper[i] += drift / (2.0 * dx);
            } else if (drift > 0.0) {
                // information travels from the right for +drift d/dx
                A.diag[i] -= drift / dx;
                A.upper[i] += drift / dx;
            } else {
                A.diag[i] += drift / dx;
                A.lower[i] -= drift / dx;
            }
        }
        if (!reaction.empty()) A.diag[i] += reaction[i];
    }
    // Dirichlet rows at both ends stay identically zero.
    return A;
}

ImplicitSolver::ImplicitSolver(const TridiagonalOperator& A, double dt) {
    const std::size_t n = A.size();
    std::vector<double> d(n), u(n);
    low_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = 1.0 - dt * A.diag[i];
        u[i] = -dt * A.upper[i];
        low_[i] = -dt * A.lower[i];
    }
    cp_.assign(n, 0.0);
    inv_.assign(n, 0.0);
    inv_[0] = 1.0 / d[0];
    cp_[0] = u[0] * inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
        inv_[i] = 1.0 / (d[i] - low_[i] * cp_[i - 1]);
        cp_[i] = u[i] * inv_[i];
    }
}

void ImplicitSolver::solve(const std::vector<double>& rhs, std::vector<double>& u) const {
    const std::size_t n = inv_.size();
    u.resize(n);
    u[0] = rhs[0] * inv_[0];
    for (std::size_t i = 1; i < n; ++i) u[i] = (rhs[i] - low_[i] * u[i - 1]) * inv_[i];
    for (std::size_t i = n - 1; i-- > 0;) u[i] -= cp_[i] * u[i + 1];
}

}  // namespace evoshift
