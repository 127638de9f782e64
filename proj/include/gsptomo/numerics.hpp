// numerics.hpp: small numerical building blocks shared by the solvers
// (matrix exponential, adaptive quadrature, bracketed root finding).

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace gsptomo::numerics {

using ScalarFn = std::function<double(double)>;

// Scaling-and-squaring Pade exponential of a dense matrix.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);
Eigen::Matrix2d expm(const Eigen::Matrix2d& a);
Eigen::Matrix3d expm(const Eigen::Matrix3d& a);

struct QuadratureResult {
    double value{0.0};
    double error_estimate{0.0};
};

struct QuadratureOptions {
    double rel_tol{1e-12};
    // Error below abs_tol is accepted regardless of the relative target.
    double abs_tol{0.0};
    unsigned max_depth{20};
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Throws QuadratureFailure when the
// result is not finite or the error estimate misses the tolerance by a wide margin.
QuadratureResult integrate(const ScalarFn& f, double a, double b, QuadratureOptions options = {});

struct RootOptions {
    double rel_tol{1e-12};
    std::size_t max_iterations{200};
};

// Refines a root of f inside [lo, hi], which must bracket a sign change.
double refine_root(const ScalarFn& f, double lo, double hi, RootOptions options = {},
                   std::size_t* iterations = nullptr);

enum class GridSpacing { Linear, Logarithmic };

struct RootScanOptions {
    std::size_t grid_points{64};
    GridSpacing spacing{GridSpacing::Logarithmic};
    double rel_tol{1e-12};
    // |f| below this at a local extremum or endpoint counts as a (tangent) root.
    double zero_tol{0.0};
};

struct ScanResult {
    std::vector<double> roots;
    std::vector<std::pair<double, double>> brackets;
    std::size_t iterations{0};
};

// Locates every root of f on [lo, hi]: sign changes on a grid are refined with
// TOMS 748; near-tangent extrema and endpoints with |f| <= zero_tol are also kept.
// Non-finite samples are treated as outside the domain.
ScanResult scan_roots(const ScalarFn& f, double lo, double hi, RootScanOptions options = {});

} // namespace gsptomo::numerics
