#pragma once

#include <cstddef>
#include <vector>

namespace evoshift {

// Uniform grid on [-R, R]. The validated factory build_grid() enforces the
// production minimum of 64 nodes; the constructor itself only needs n >= 2 so
// tests can use legible toy grids.
struct Grid1D {
    double R = 0.0;
    std::size_t n_points = 0;
    double dx = 0.0;
    std::vector<double> nodes;

    Grid1D() = default;
    Grid1D(double radius, std::size_t n);
};

Grid1D build_grid(double R, std::size_t n_points);

// Trapezoidal rule on node samples; exact for piecewise-linear integrands.
double integrate(const Grid1D& grid, const std::vector<double>& values);

// Per-node coefficients of the second-order stencil for
//   (A v)_i = drift * (dv/dx)_i + diffusivity * (d2v/dx2)_i + reaction_i * v_i
// with homogeneous Dirichlet rows (all zero) at both boundary nodes.
struct TridiagonalOperator {
    std::vector<double> lower;  // coefficient of v_{i-1}
    std::vector<double> diag;
    std::vector<double> upper;  // coefficient of v_{i+1}

    std::size_t size() const { return diag.size(); }
    std::vector<double> apply(const std::vector<double>& v) const;
};

// Central differences for the drift while the cell Peclet number
// |drift| dx / (2 diffusivity) stays below 1, first-order upwind beyond.
TridiagonalOperator advection_diffusion_operator(const Grid1D& grid, double drift,
                                                 double diffusivity,
                                                 const std::vector<double>& reaction);

// Prefactored Thomas solve of (I - dt A) u = rhs. The matrix is constant in
// time for our steppers, so elimination coefficients are computed once.
class ImplicitSolver {
public:
    ImplicitSolver() = default;
    ImplicitSolver(const TridiagonalOperator& A, double dt);
    void solve(const std::vector<double>& rhs, std::vector<double>& u) const;

private:
    std::vector<double> cp_;    // normalized superdiagonal
    std::vector<double> inv_;   // inverse pivots
    std::vector<double> low_;   // subdiagonal of (I - dt A)
};

}  // namespace evoshift
