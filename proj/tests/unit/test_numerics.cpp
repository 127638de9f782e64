// test_numerics.cpp: matrix exponential, quadrature and root scanning.

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "gsptomo/errors.hpp"
#include "gsptomo/numerics.hpp"

using namespace gsptomo;

namespace {

Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& a, int terms = 50) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = sum;
    for (int k = 1; k < terms; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

} // namespace

TEST_CASE("expm matches a long Taylor sum") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 50; ++i) {
        Eigen::Matrix3d a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = u(rng);
        const Eigen::Matrix3d e = numerics::expm(a);
        CHECK((e - taylor_exp(a)).norm() <= 1e-12 * e.norm());
    }
}

TEST_CASE("expm of a rotation generator") {
    Eigen::Matrix2d m;
    m << 0, 1, -1, 0;
    const Eigen::Matrix2d e = numerics::expm(Eigen::Matrix2d(std::numbers::pi / 2 * m));
    CHECK(e(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(e(0, 1) == doctest::Approx(1.0));
    CHECK(e(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("adaptive quadrature") {
    CHECK(numerics::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-13));
    CHECK(numerics::integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0).value ==
          doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
    const double osc = numerics::integrate([](double x) { return std::cos(40.0 * x) * x; }, 0.0, 3.0).value;
    const double exact = (std::cos(120.0) - 1.0) / 1600.0 + 3.0 * std::sin(120.0) / 40.0;
    CHECK(osc == doctest::Approx(exact).epsilon(1e-12));
    CHECK(numerics::integrate([](double) { return 1.0; }, 2.0, 2.0).value == 0.0);
    CHECK_THROWS_AS(numerics::integrate([](double x) { return 1.0 / x; }, -1.0, 1.0), Error);

    // Rounding noise around zero terminates under an absolute tolerance.
    const auto noise = [](double x) { return 1e-17 * std::sin(1e6 * x); };
    const auto r = numerics::integrate(noise, 0.0, 1.0, numerics::QuadratureOptions{1e-12, 1e-14});
    CHECK(std::abs(r.value) <= 1e-14);

    // Short and long intervals reach the same relative accuracy.
    CHECK(numerics::integrate([](double x) { return x; }, 0.0, 1e-7).value ==
          doctest::Approx(5e-15).epsilon(1e-13));
    CHECK(numerics::integrate([](double x) { return std::exp(-x / 50.0); }, 0.0, 500.0).value ==
          doctest::Approx(50.0 * (1.0 - std::exp(-10.0))).epsilon(1e-12));
}

TEST_CASE("bracketed refinement") {
    const double r = numerics::refine_root([](double x) { return x * x - 2.0; }, 0.0, 2.0);
    CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(numerics::refine_root([](double x) { return x * x + 1.0; }, 0.0, 2.0), Error);
}

TEST_CASE("root scan") {
    numerics::RootScanOptions opts;
    opts.spacing = numerics::GridSpacing::Linear;
    SUBCASE("several simple roots") {
        const auto res = numerics::scan_roots([](double x) { return std::sin(x); }, 0.5, 10.0, opts);
        REQUIRE(res.roots.size() == 3);
        CHECK(res.roots[0] == doctest::Approx(std::numbers::pi));
        CHECK(res.roots[2] == doctest::Approx(3 * std::numbers::pi));
        CHECK(res.brackets.size() == 3);
    }
    SUBCASE("tangent root") {
        opts.zero_tol = 1e-9;
        const auto res = numerics::scan_roots([](double x) { return (x - 1.3) * (x - 1.3); }, 0.0, 3.0, opts);
        REQUIRE(res.roots.size() == 1);
        CHECK(res.roots[0] == doctest::Approx(1.3).epsilon(1e-4));
    }
    SUBCASE("root at an endpoint") {
        opts.zero_tol = 1e-12;
        const auto res = numerics::scan_roots([](double x) { return x - 2.0; }, 0.0, 2.0, opts);
        REQUIRE(res.roots.size() == 1);
        CHECK(res.roots[0] == doctest::Approx(2.0));
    }
    SUBCASE("no roots") {
        const auto res = numerics::scan_roots([](double x) { return 1.0 + x * x; }, -1.0, 1.0, opts);
        CHECK(res.roots.empty());
    }
    SUBCASE("logarithmic grid over decades") {
        opts.spacing = numerics::GridSpacing::Logarithmic;
        const auto res = numerics::scan_roots([](double x) { return std::log(x / 3e-4); }, 1e-6, 1e3, opts);
        REQUIRE(res.roots.size() == 1);
        CHECK(res.roots[0] == doctest::Approx(3e-4).epsilon(1e-10));
    }
    SUBCASE("non-finite samples are outside the domain") {
        const auto res = numerics::scan_roots([](double x) { return x < 1.0 ? NAN : x - 2.0; }, 0.0, 3.0, opts);
        REQUIRE(res.roots.size() == 1);
        CHECK(res.roots[0] == doctest::Approx(2.0));
    }
}
