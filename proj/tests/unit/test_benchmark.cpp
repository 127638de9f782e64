// test_benchmark.cpp: Ohmic Lorentz-Drude coefficients and their integrals.

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "gsptomo/benchmark.hpp"
#include "gsptomo/numerics.hpp"

using namespace gsptomo;
using namespace gsptomo::benchmark;

namespace {

// Independent antiderivative of lambda in extended precision:
// int_0^t e^{-a s} cos(b s) ds and int_0^t e^{-a s} sin(b s) ds.
long double lambda_integral_oracle(long double a2, long double wc, long double w, long double t) {
    const long double n = wc * wc + w * w;
    const long double e = std::exp(-wc * t);
    const long double c = std::cos(w * t);
    const long double s = std::sin(w * t);
    const long double ic = (wc - e * (wc * c - w * s)) / n;
    const long double is = (w - e * (wc * s + w * c)) / n;
    return a2 * wc * wc * w / n * (t - ic - (wc / w) * is);
}

} // namespace

TEST_CASE("coefficient values") {
    const BenchmarkTips tips;
    const HamiltonianParams h;
    CHECK(lambda_shape(10.0, 1.0, 0.0) == 0.0);
    CHECK(delta_shape(10.0, 1.0, 0.0) == 0.0);
    CHECK(benchmark_lambda(tips, h, 0.0) == 0.0);
    CHECK(benchmark_delta_coeff(tips, h, 0.0) == 0.0);
    CHECK(stationary_lambda(tips, h) == doctest::Approx(0.01 * 100.0 / 101.0));
    CHECK(stationary_delta(tips, h) == doctest::Approx(2 * 0.01 * 100.0 / 101.0 * 10.0));
    CHECK(benchmark_lambda(tips, h, 50.0) == doctest::Approx(stationary_lambda(tips, h)).epsilon(1e-15));

    // Explicit formula at an intermediate time.
    const double t = 0.3;
    const double lam = 0.01 * 100.0 / 101.0 * (1 - std::exp(-3.0) * (std::cos(0.3) + 10.0 * std::sin(0.3)));
    const double del =
        2 * 0.01 * 100.0 / 101.0 * 10.0 * (1 - std::exp(-3.0) * (std::cos(0.3) - 0.1 * std::sin(0.3)));
    CHECK(benchmark_lambda(tips, h, t) == doctest::Approx(lam).epsilon(1e-14));
    CHECK(benchmark_delta_coeff(tips, h, t) == doctest::Approx(del).epsilon(1e-14));

    CHECK_THROWS_AS(validate(BenchmarkTips{0.0, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(validate(BenchmarkTips{0.1, -1.0, 1.0}), Error);
    CHECK_THROWS_AS(validate(BenchmarkTips{0.1, 1.0, std::nan("")}), Error);
    CHECK(high_temperature_warning(BenchmarkTips{0.1, 1.0, 1.0}));
    CHECK_FALSE(high_temperature_warning(tips));
    CHECK_THROWS_AS(make_benchmark_model(HamiltonianParams(1.0, 1.0, 0.2)), Error);
}

TEST_CASE("physical units scale with omega") {
    const BenchmarkTips tips{0.02, 6.0, 4.0};
    const HamiltonianParams h(1.7, 3.0, 0.0, 0.4);
    const double w = h.omega();
    const double t = 0.8;
    const double pref = tips.alpha_sq * 36.0 / (36.0 + 9.0);
    CHECK(benchmark_lambda(tips, h, t) == doctest::Approx(pref * w * lambda_shape(6.0, w, t)));
    CHECK(benchmark_delta_coeff(tips, h, t) == doctest::Approx(2 * pref * 4.0 * w * delta_shape(6.0, w, t)));
}

TEST_CASE("closed-form integral of lambda") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> log_ratio(std::log(0.05), std::log(100.0));
    std::uniform_real_distribution<double> time(0.0, 30.0);
    for (int i = 0; i < 60; ++i) {
        const BenchmarkTips tips{0.03, std::exp(log_ratio(rng)), 5.0};
        const HamiltonianParams h(1.0, i % 2 ? 1.0 : 2.5);
        const double t = time(rng);
        const double closed = lambda_integral_closed_form(tips, h, t);
        const double quad = numerics::integrate([&](double s) { return benchmark_lambda(tips, h, s); }, 0.0, t,
                                                numerics::QuadratureOptions{1e-13, 1e-15, 20})
                                .value;
        CHECK(closed == doctest::Approx(quad).epsilon(1e-10));
        const long double oracle = lambda_integral_oracle(0.03L, tips.omega_c, h.omega(), t);
        CHECK(std::abs(closed - static_cast<double>(oracle)) <= 1e-12 * std::max(1.0, std::abs(closed)));
        CHECK(lambda_integral_unit_coupling(tips.omega_c, h.omega(), t) * tips.alpha_sq ==
              doctest::Approx(closed).epsilon(1e-14));
    }
    CHECK(lambda_integral_closed_form(BenchmarkTips{}, HamiltonianParams{}, 0.0) == 0.0);
}

TEST_CASE("the integral of lambda is nondecreasing in time for a positive lambda") {
    const BenchmarkTips tips;
    const HamiltonianParams h;
    double prev = 0.0;
    for (int i = 1; i <= 400; ++i) {
        const double t = 0.05 * i;
        const double v = lambda_integral_closed_form(tips, h, t);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("exponential approach to the stationary values") {
    for (double wc : {0.5, 3.0, 10.0}) {
        const BenchmarkTips tips{0.01, wc, 10.0};
        const HamiltonianParams h;
        const double ls = stationary_lambda(tips, h);
        const double ds = stationary_delta(tips, h);
        for (double t : {0.5, 2.0, 5.0, 12.0}) {
            const double bound_l = ls * std::exp(-wc * t) * (1 + wc);
            const double bound_d = ds * std::exp(-wc * t) * (1 + 1.0 / wc);
            CHECK(std::abs(benchmark_lambda(tips, h, t) - ls) <= bound_l * (1 + 1e-12) + 4e-16 * ls);
            CHECK(std::abs(benchmark_delta_coeff(tips, h, t) - ds) <= bound_d * (1 + 1e-12) + 4e-16 * ds);
        }
        // Stationary ratio of diffusion to damping.
        CHECK(ds / ls == doctest::Approx(2 * tips.kT_over_hbar_omega));
    }
}

TEST_CASE("Lindblad diagnostic") {
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(0.01 * i);
    const HamiltonianParams h;
    const BenchmarkTips hot{0.01, 10.0, 10.0};
    const LindbladReport r = lindblad_diagnostic(hot, h, grid);
    double brute = INFINITY;
    for (double t : grid) brute = std::min(brute, benchmark_delta_coeff(hot, h, t) - benchmark_lambda(hot, h, t));
    CHECK(r.min_delta_minus_lambda == brute);
    CHECK(r.min_delta_plus_lambda >= 0.0);

    // Cold bath: stationary Delta = 2 (kT/hbar w) lambda < lambda.
    const BenchmarkTips cold{0.01, 10.0, 0.1};
    const LindbladReport rc = lindblad_diagnostic(cold, h, grid);
    CHECK_FALSE(rc.is_lindblad);
    CHECK(rc.min_delta_minus_lambda < 0.0);
    CHECK_THROWS_AS(lindblad_diagnostic(hot, h, std::vector<double>{}), Error);
}

TEST_CASE("benchmark model plugs into the generic coefficient layer") {
    const HamiltonianParams h(2.0, 1.5, 0.0, 0.7);
    const MecModel model = make_benchmark_model(h);
    const BenchmarkTips tips{0.02, 4.0, 6.0};
    const TipVector p = to_tip_vector(tips);
    CHECK(from_tip_vector(p) == tips);
    const MecValues v = model.evaluate(1.3, p);
    CHECK(v.lambda == doctest::Approx(benchmark_lambda(tips, h, 1.3)));
    const Vec3 d = diffusion_vector(h, v);
    const double dc = benchmark_delta_coeff(tips, h, 1.3);
    CHECK(d[0] == doctest::Approx(dc));
    CHECK(d[1] == doctest::Approx(dc));
    CHECK(d[2] == doctest::Approx(0.0));
}
