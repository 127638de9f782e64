// test_tomography.cpp: Gaussian marginals and their finite-point inversion.

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "gsptomo/numerics.hpp"
#include "gsptomo/tomography.hpp"

using namespace gsptomo;
using namespace gsptomo::tomography;

namespace {

const HamiltonianParams kUnit;

CumulantState state_from(double mq, double mp, double vq, double vp, double c) {
    return from_physical({mq, mp, vq, vp, c}, kUnit);
}

std::vector<TomogramPoint> exact_points(const CumulantState& s, TomogramLine line, const std::vector<double>& xs,
                                        const HamiltonianParams& h = kUnit) {
    return sample_tomogram(s, h, line, xs, 0.0, 0);
}

double wigner_mass(const CumulantState& s, const HamiltonianParams& h) {
    const PhysicalCumulants c = to_physical(s, h);
    const double sq = std::sqrt(c.var_q);
    const double sp = std::sqrt(c.var_p);
    numerics::QuadratureOptions o{1e-10, 0.0, 30};
    return numerics::integrate(
               [&](double q) {
                   return numerics::integrate([&](double p) { return wigner_gaussian(s, h, q, p); },
                                              c.mean_p - 10 * sp, c.mean_p + 10 * sp, o)
                       .value;
               },
               c.mean_q - 10 * sq, c.mean_q + 10 * sq, o)
        .value;
}

} // namespace

TEST_CASE("Wigner function values and normalization") {
    CHECK(wigner_gaussian(CumulantState{}, kUnit, 0.0, 0.0) == doctest::Approx(1.0 / std::numbers::pi));
    const CumulantState s = state_from(0.4, -1.1, 0.9, 0.7, 0.2);
    CHECK(wigner_gaussian(s, kUnit, 0.4, -1.1) ==
          doctest::Approx(1.0 / (2 * std::numbers::pi * std::sqrt(0.9 * 0.7 - 0.04))));
    CHECK(wigner_mass(s, kUnit) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(wigner_mass(s, HamiltonianParams(2.0, 0.5, 0.0, 0.3)) == doctest::Approx(1.0).epsilon(1e-6));
    CumulantState flat{0.0, Vec2::Zero(), Vec3(1.0, 1.0, 1.0)};
    CHECK_THROWS_AS(wigner_gaussian(flat, kUnit, 0.0, 0.0), Error);
}

TEST_CASE("Radon marginals") {
    const CumulantState s = state_from(0.4, -1.1, 0.9, 0.7, 0.2);
    SUBCASE("position and momentum lines are the plain marginals") {
        for (double x : {-2.0, 0.0, 0.4, 1.3}) {
            const double pq = std::exp(-(x - 0.4) * (x - 0.4) / (2 * 0.9)) / std::sqrt(2 * std::numbers::pi * 0.9);
            const double pp = std::exp(-(x + 1.1) * (x + 1.1) / (2 * 0.7)) / std::sqrt(2 * std::numbers::pi * 0.7);
            CHECK(radon_gaussian(s, kUnit, kPositionLine, x) == doctest::Approx(pq).epsilon(1e-15));
            CHECK(radon_gaussian(s, kUnit, kMomentumLine, x) == doctest::Approx(pp).epsilon(1e-15));
        }
    }
    SUBCASE("diagonal line against quadrature of the Wigner function along the line") {
        const TomogramLine l = kDiagonalLine;
        for (double x : {-1.0, -0.3, 0.5}) {
            const double along = numerics::integrate(
                                     [&](double q) { return wigner_gaussian(s, kUnit, q, (x - l.mu * q) / l.nu) / l.nu; },
                                     -12.0, 12.0)
                                     .value;
            CHECK(radon_gaussian(s, kUnit, l, x) == doctest::Approx(along).epsilon(1e-6));
        }
    }
    SUBCASE("normalization on arbitrary lines") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 40; ++i) {
            const TomogramLine l = make_line(u(rng), u(rng));
            const LineMoments m = line_moments(s, kUnit, l);
            const double sd = std::sqrt(m.variance);
            const double total =
                numerics::integrate([&](double x) { return radon_gaussian(s, kUnit, l, x); }, m.mean - 12 * sd,
                                    m.mean + 12 * sd)
                    .value;
            CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
    SUBCASE("homogeneity under line scaling") {
        const TomogramLine l{0.3, -0.8};
        for (double c : {0.5, 2.0, 7.0}) {
            const TomogramLine lc{c * l.mu, c * l.nu};
            for (double x : {-0.6, 0.1, 0.9}) {
                CHECK(radon_gaussian(s, kUnit, lc, c * x) == doctest::Approx(radon_gaussian(s, kUnit, l, x) / c));
            }
        }
    }
    CHECK_THROWS_AS(make_line(0.0, 0.0), Error);
}

TEST_CASE("synthetic tomogram sampling") {
    const CumulantState s = state_from(0.2, 0.1, 0.8, 0.6, 0.0);
    const std::vector<double> xs{-1.0, 0.0, 0.5};
    const auto exact = exact_points(s, kPositionLine, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(exact[i].value == radon_gaussian(s, kUnit, kPositionLine, xs[i]));

    const auto a = sample_tomogram(s, kUnit, kPositionLine, xs, 0.01, 42);
    const auto b = sample_tomogram(s, kUnit, kPositionLine, xs, 0.01, 42);
    const auto c = sample_tomogram(s, kUnit, kPositionLine, xs, 0.01, 43);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(a[i].value == b[i].value);
        CHECK(a[i].value != c[i].value);
        CHECK(a[i].noise_sigma == 0.01);
    }

    // Sample mean over 10^4 draws is within 3 standard errors of the exact value.
    const double target = radon_gaussian(s, kUnit, kPositionLine, 0.0);
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        sum += sample_tomogram(s, kUnit, kPositionLine, std::vector<double>{0.0}, 0.01, seed).front().value;
    }
    CHECK(std::abs(sum / 10000.0 - target) <= 3e-4);

    const auto clamped = sample_tomogram(s, kUnit, kPositionLine, std::vector<double>{40.0}, 0.5, 1);
    CHECK(clamped.front().value >= 0.0);
}

TEST_CASE("mean and variance recovery examples") {
    SUBCASE("sign known") {
        const CumulantState s = state_from(0.7, 0.0, 0.9, 0.5, 0.0);
        const auto pts = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, true));
        const auto r = recover_mean_and_variance(pts, Sign::Positive);
        CHECK(r.mean == doctest::Approx(0.7).epsilon(1e-8));
        CHECK(r.variance == doctest::Approx(0.9).epsilon(1e-8));
        CHECK(r.used_points == 3);
    }
    SUBCASE("zero mean") {
        const CumulantState s = state_from(0.0, 0.0, 0.9, 0.5, 0.0);
        const auto pts = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, false));
        for (auto sign : {Sign::Positive, Sign::Negative}) {
            const auto r = recover_mean_and_variance(pts, sign);
            CHECK(std::abs(r.mean) <= 1e-7);
            CHECK(r.variance == doctest::Approx(0.9).epsilon(1e-8));
        }
        CHECK(std::abs(recover_mean_and_variance(pts).mean) <= 1e-7);
    }
    SUBCASE("sign unknown picks the negative branch") {
        const CumulantState s = state_from(-0.3, 0.0, 0.9, 0.5, 0.0);
        const auto pts = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, false));
        const auto r = recover_mean_and_variance(pts);
        CHECK(r.mean == doctest::Approx(-0.3).epsilon(1e-8));
        CHECK(r.variance == doctest::Approx(0.9).epsilon(1e-8));
        CHECK(r.branch == Sign::Negative);
        CHECK(r.used_points == 4);
    }
    SUBCASE("a wrong sign hint finds no common root") {
        const CumulantState s = state_from(-0.8, 0.0, 0.9, 0.5, 0.0);
        const auto pts = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, true));
        CHECK_THROWS_AS(recover_mean_and_variance(pts, Sign::Positive), Error);
    }
    SUBCASE("malformed input") {
        const CumulantState s = state_from(0.5, 0.0, 0.9, 0.5, 0.0);
        auto pts = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, true));
        pts[1].value = 0.0;
        try {
            recover_mean_and_variance(pts, Sign::Positive);
            FAIL("expected InvalidDensity");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidDensity);
        }
        const auto no_peak = exact_points(s, kPositionLine, {0.5, 1.0, 1.5});
        CHECK_THROWS_AS(recover_mean_and_variance(no_peak, Sign::Positive), Error);
        const auto too_few = exact_points(s, kPositionLine, {0.0, 1.0});
        CHECK_THROWS_AS(recover_mean_and_variance(too_few, Sign::Positive), Error);
    }
}

TEST_CASE("covariance recovery examples") {
    SUBCASE("uncorrelated") {
        const CumulantState s = state_from(0.3, -0.2, 0.8, 0.7, 0.0);
        const double mean = line_moments(s, kUnit, kDiagonalLine).mean;
        const auto pts = exact_points(s, kDiagonalLine, covariance_abscissae(mean, 1.0));
        const auto r = recover_covariance(pts, 0.3, -0.2, 0.8, 0.7, kUnit);
        CHECK(std::abs(r.covariance) <= 1e-8);
        CHECK_FALSE(r.robertson_breach);
        CHECK(r.used_points == 2);
    }
    SUBCASE("correlated") {
        const CumulantState s = state_from(0.0, 0.0, 0.6, 0.6, 0.2);
        const auto pts = exact_points(s, kDiagonalLine, covariance_abscissae(0.0, 1.0));
        const auto r = recover_covariance(pts, 0.0, 0.0, 0.6, 0.6, kUnit);
        CHECK(r.covariance == doctest::Approx(0.2).epsilon(1e-8));
        CHECK(r.spread == doctest::Approx(0.8).epsilon(1e-8));
    }
    SUBCASE("inconsistent variances are flagged, not thrown") {
        const CumulantState s = state_from(0.0, 0.0, 0.6, 0.6, 0.0);
        const auto pts = exact_points(s, kDiagonalLine, covariance_abscissae(0.0, 1.0));
        const auto r = recover_covariance(pts, 0.0, 0.0, 0.3, 0.3, kUnit);
        CHECK(r.covariance == doctest::Approx(0.3).epsilon(1e-8));
        CHECK(r.robertson_breach);
    }
}

TEST_CASE("full cumulant reconstruction round trip over a random family") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> mean(-3.0, 3.0);
    std::uniform_real_distribution<double> var(0.5, 5.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const double x0 = var(rng);
        const double x1 = var(rng);
        const double c_max = std::sqrt(std::max(0.0, x0 * x1 - 0.25 - 0.05));
        CumulantState s{0.0, Vec2(mean(rng), mean(rng)), Vec3(x0, x1, c_max * unit(rng))};
        const bool known = i % 2 == 0;
        const auto q = exact_points(s, kPositionLine, first_cumulant_abscissae(1.0, known));
        const auto p = exact_points(s, kMomentumLine, first_cumulant_abscissae(1.0, known));
        const double dmean = line_moments(s, kUnit, kDiagonalLine).mean;
        const auto d = exact_points(s, kDiagonalLine, covariance_abscissae(dmean, 1.0));
        std::optional<std::pair<Sign, Sign>> signs;
        if (known) {
            signs = std::make_pair(s.s[0] < 0 ? Sign::Negative : Sign::Positive,
                                   s.s[1] < 0 ? Sign::Negative : Sign::Positive);
        }
        const auto r = reconstruct_cumulants(q, p, d, kUnit, signs, 0.0);
        CHECK((r.state.s - s.s).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((r.state.x - s.x).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(r.budget.total() == (known ? 8 : 10));
        CHECK(r.budget.per_tomogram().size() == 3);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("point budget keeps the largest count per tomogram") {
    PointBudget b;
    b.record({1.0, kPositionLine}, 3);
    b.record({1.0, kPositionLine}, 4);
    b.record({1.0, kPositionLine}, 2);
    b.record({2.0, kPositionLine}, 4);
    CHECK(b.total() == 8);
    CHECK(b.count({1.0, kPositionLine}) == 4);
    CHECK(b.count({1.0, kMomentumLine}) == 0);
    PointBudget other;
    other.record({2.0, kDiagonalLine}, 2);
    b.merge(other);
    CHECK(b.total() == 10);
}
