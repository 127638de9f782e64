#include "gsptomo/numerics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "gsptomo/errors.hpp"

namespace gsptomo::numerics {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    return a.exp();
}

Eigen::Matrix2d expm(const Eigen::Matrix2d& a) {
    return a.exp();
}

Eigen::Matrix3d expm(const Eigen::Matrix3d& a) {
    return a.exp();
}

QuadratureResult integrate(const ScalarFn& f, double a, double b, QuadratureOptions options) {
    if (a == b) return {};
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    // The library's local error estimate ignores the interval half-width, so
    // every integral is mapped onto [-1, 1] first.
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const auto mapped = [&](double u) { return half * f(mid + half * u); };
    double tol = options.rel_tol;
    if (options.abs_tol > 0.0) {
        const double coarse = std::abs(gk::integrate(mapped, -1.0, 1.0, 0, options.rel_tol));
        tol = coarse > 0.0 ? std::max(tol, options.abs_tol / coarse) : 1.0;
    }
    double error = 0.0;
    double l1 = 0.0;
    const double value = gk::integrate(mapped, -1.0, 1.0, options.max_depth, tol, &error, &l1);
    if (!std::isfinite(value) || !std::isfinite(error)) {
        fail(ErrorCode::QuadratureFailure, "non-finite integrand or result");
    }
    const double scale = std::max(std::abs(l1), std::numeric_limits<double>::min());
    if (error > std::max(std::sqrt(options.rel_tol) * scale, options.abs_tol)) {
        fail(ErrorCode::QuadratureFailure, "error estimate " + std::to_string(error) +
                                               " far above tolerance");
    }
    return {value, std::abs(error)};
}

namespace {

struct RelativeTolerance {
    double rel;
    bool operator()(double lo, double hi) const {
        return std::abs(hi - lo) <= rel * std::max(std::abs(lo), std::abs(hi));
    }
};

} // namespace

double refine_root(const ScalarFn& f, double lo, double hi, RootOptions options,
                   std::size_t* iterations) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    require(std::signbit(flo) != std::signbit(fhi), ErrorCode::NoBracket,
            "refine_root called without a sign change");
    std::uintmax_t iters = options.max_iterations;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, RelativeTolerance{options.rel_tol}, iters);
    if (iterations) *iterations += static_cast<std::size_t>(iters);
    const double fa = std::abs(f(a));
    const double fb = std::abs(f(b));
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    return 0.5 * (a + b);
}

ScanResult scan_roots(const ScalarFn& f, double lo, double hi, RootScanOptions options) {
    require(hi > lo, ErrorCode::Domain, "scan_roots needs hi > lo");
    require(options.grid_points >= 2, ErrorCode::Domain, "scan_roots needs at least two grid points");
    if (options.spacing == GridSpacing::Logarithmic) {
        require(lo > 0.0, ErrorCode::Domain, "logarithmic scan needs lo > 0");
    }

    const std::size_t n = options.grid_points;
    std::vector<double> xs(n);
    std::vector<double> fs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        double x = options.spacing == GridSpacing::Logarithmic
                       ? lo * std::pow(hi / lo, u)
                       : lo + (hi - lo) * u;
        if (i == n - 1) x = hi;
        xs[i] = x;
        fs[i] = f(x);
    }

    ScanResult out;
    const RootOptions refine{options.rel_tol, 200};
    auto push = [&](double r) { out.roots.push_back(r); };

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(fs[i])) continue;
        if (fs[i] == 0.0) {
            push(xs[i]);
            continue;
        }
        if (i + 1 < n && std::isfinite(fs[i + 1]) && fs[i + 1] != 0.0 &&
            std::signbit(fs[i]) != std::signbit(fs[i + 1])) {
            out.brackets.emplace_back(xs[i], xs[i + 1]);
            push(refine_root(f, xs[i], xs[i + 1], refine, &out.iterations));
        }
    }

    // Pairs of close roots hide inside one cell; look for local minima of |f|
    // without a sign change and check whether the extremum crosses zero.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double a = fs[i - 1];
        const double b = fs[i];
        const double c = fs[i + 1];
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
        if (std::signbit(a) != std::signbit(b) || std::signbit(b) != std::signbit(c)) continue;
        if (!(std::abs(b) < std::abs(a) && std::abs(b) < std::abs(c))) continue;
        const double sgn = b > 0.0 ? 1.0 : -1.0;
        auto g = [&](double x) {
            const double v = f(x);
            return std::isfinite(v) ? sgn * v : std::numeric_limits<double>::max();
        };
        std::uintmax_t iters = 200;
        const auto [xmin, gmin] =
            boost::math::tools::brent_find_minima(g, xs[i - 1], xs[i + 1], 52, iters);
        out.iterations += static_cast<std::size_t>(iters);
        if (gmin < 0.0) {
            out.brackets.emplace_back(xs[i - 1], xmin);
            push(refine_root(f, xs[i - 1], xmin, refine, &out.iterations));
            out.brackets.emplace_back(xmin, xs[i + 1]);
            push(refine_root(f, xmin, xs[i + 1], refine, &out.iterations));
        } else if (gmin <= options.zero_tol) {
            push(xmin);
        }
    }

    for (std::size_t i : {std::size_t{0}, n - 1}) {
        if (std::isfinite(fs[i]) && fs[i] != 0.0 && std::abs(fs[i]) <= options.zero_tol) push(xs[i]);
    }

    std::sort(out.roots.begin(), out.roots.end());
    std::vector<double> unique;
    for (double r : out.roots) {
        if (unique.empty() || std::abs(r - unique.back()) > 1e-9 * std::max(std::abs(r), 1e-300)) {
            unique.push_back(r);
        }
    }
    out.roots = std::move(unique);
    return out;
}

} // namespace gsptomo::numerics
