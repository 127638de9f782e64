// test_dynamics.cpp: propagators, cumulant evolution and rotating-frame
// relations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"

#include "gsptomo/benchmark.hpp"
#include "gsptomo/dynamics.hpp"
#include "gsptomo/numerics.hpp"

using namespace gsptomo;

namespace {

Mat3 taylor_exp3(const Mat3& a) {
    Mat3 sum = Mat3::Identity();
    Mat3 term = Mat3::Identity();
    for (int k = 1; k < 50; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

MecModel constant_model_values(double lambda, double dqq, double dpp, double dqp, TipVector& tips) {
    tips = {lambda, dqq, dpp, dqp};
    return make_constant_model();
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

} // namespace

TEST_CASE("propagator examples") {
    const Propagators p(HamiltonianParams(1.0, 1.0, 0.0));
    const Mat2 quarter = p.exp_tM(std::numbers::pi / 2);
    CHECK(quarter(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(quarter(0, 1) == doctest::Approx(1.0));
    CHECK(quarter(1, 0) == doctest::Approx(-1.0));
    CHECK(quarter(1, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p.exp_tM(0.0) == Mat2::Identity());
    CHECK((p.exp_tR(0.0) - Mat3::Identity()).norm() == 0.0);
    const Mat3 r = p.exp_tR(0.7);
    CHECK((r - taylor_exp3(0.7 * build_R(HamiltonianParams(1.0, 1.0, 0.0)))).norm() <= 1e-10);
}

TEST_CASE("closed-form exp(tM) agrees with the generic exponential on all branches") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int i = 0; i < 300; ++i) {
        const double w = u(rng);
        double d = 0.0;
        switch (i % 3) {
        case 0: d = w * u(rng) / 3.0; break;          // trigonometric
        case 1: d = w * (1.0 + u(rng)); break;         // hyperbolic
        default: d = w * (1.0 + 1e-9 * u(rng)); break; // critical
        }
        const HamiltonianParams h(1.0, w, d);
        const Propagators p(h);
        for (double t : {0.01, 0.4, 1.7, 4.0}) {
            const Mat2 closed = p.exp_tM(t);
            const Mat2 generic = numerics::expm(Mat2(t * build_M(h)));
            CHECK((closed - generic).norm() <= 1e-10 * generic.norm());
            // The determinant is only computable when cancellation is mild.
            if (generic.norm() < 10.0) {
                CHECK(closed.determinant() == doctest::Approx(1.0).epsilon(1e-9));
                CHECK(p.exp_tR(t).determinant() == doctest::Approx(1.0).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("exp(tM) exp(-tM) is the identity up to conditioning") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double w = u(rng);
        const double d = (i % 2 == 0 ? 0.5 : 1.5) * w;
        const HamiltonianParams h(1.0, w, d);
        const Propagators p(h);
        const double t_max = 50.0 / std::max(std::abs(d), w);
        for (double frac : {0.01, 0.2, 0.6, 1.0}) {
            const double t = frac * t_max;
            const Mat2 a = p.exp_tM(t);
            const Mat2 b = p.exp_tM(-t);
            // Normwise: rounding in the hyperbolic branch scales with |A| |B|.
            CHECK((a * b - Mat2::Identity()).norm() <= 1e-12 * a.norm() * b.norm());
        }
    }
}

TEST_CASE("exp(tR) is the action of exp(tM) on second cumulants") {
    const HamiltonianParams h(1.0, 1.3, 0.4);
    const Propagators p(h);
    const Vec3 x(0.8, 0.7, 0.2);
    for (double t : {0.3, 1.1, 2.5}) {
        const Mat2 e = p.exp_tM(t);
        Mat2 c;
        c << x[0], x[2], x[2], x[1];
        const Mat2 moved = e * c * e.transpose();
        const Vec3 y = p.exp_tR(t) * x;
        CHECK(y[0] == doctest::Approx(moved(0, 0)).epsilon(1e-12));
        CHECK(y[1] == doctest::Approx(moved(1, 1)).epsilon(1e-12));
        CHECK(y[2] == doctest::Approx(moved(0, 1)).epsilon(1e-12));
    }
}

TEST_CASE("closed dynamics rotate the first cumulants and conserve the symplectic invariant") {
    TipVector tips;
    const MecModel m = constant_model_values(0.0, 0.0, 0.0, 0.0, tips);
    const HamiltonianParams h(1.0, 1.0, 0.0);
    const CumulantState init{0.0, Vec2(1.2, -0.4), Vec3(0.9, 0.6, 0.3)};
    IntegratorOptions tight{1e-12, 1e-12, 1e-4, 1e-7, true};
    const auto traj = evolve(init, h, m, tips, linspace(0.0, 30.0, 301), tight);
    const Propagators p(h);
    for (const auto& s : traj.samples) {
        CHECK(s.s.norm() == doctest::Approx(init.s.norm()).epsilon(1e-9));
        CHECK(std::abs(s.symplectic_invariant() - init.symplectic_invariant()) <= 1e-8);
    }
    for (const Vec2& st : to_rotating_first(traj, p)) CHECK((st - init.s).norm() <= 1e-9);
    const Vec3 rel = second_cumulant_integral_relation(traj.samples.back().x, init.x, p, 30.0, 0.0);
    CHECK(rel.norm() <= 1e-8);
}

TEST_CASE("constant friction damps the first cumulants uniformly") {
    TipVector tips;
    const MecModel m = constant_model_values(0.2, 0.3, 0.3, 0.0, tips);
    const HamiltonianParams h(1.0, 2.0, 0.0);
    const CumulantState init{0.0, Vec2(1.0, 1.0), Vec3(0.5, 0.5, 0.0)};
    const auto traj = evolve(init, h, m, tips, linspace(0.0, 5.0, 51));
    for (const auto& s : traj.samples) {
        CHECK(s.s.norm() == doctest::Approx(init.s.norm() * std::exp(-0.2 * s.t)).epsilon(1e-8));
    }
}

TEST_CASE("benchmark trajectory relaxes to the thermal fixed point") {
    const HamiltonianParams h = benchmark::benchmark_hamiltonian();
    const benchmark::BenchmarkTips tips{0.01, 10.0, 10.0};
    const MecModel model = benchmark::make_benchmark_model(h);
    IntegratorOptions tight{1e-12, 1e-12, 1e-3, 1e-7, true};
    const auto traj = evolve(CumulantState{}, h, model, benchmark::to_tip_vector(tips), std::vector<double>{1500.0}, tight);
    const double lam = benchmark::stationary_lambda(tips, h);
    const double del = benchmark::stationary_delta(tips, h);
    const Mat3 a = build_R(h) - 2.0 * lam * Mat3::Identity();
    const Vec3 fixed = a.fullPivLu().solve(-Vec3(del, del, 0.0));
    CHECK((traj.samples.back().x - fixed).norm() <= 1e-6);
    CHECK(fixed[0] == doctest::Approx(del / (2.0 * lam)).epsilon(1e-10));
}

TEST_CASE("rotating first cumulant measures the friction integral") {
    const HamiltonianParams h = benchmark::benchmark_hamiltonian();
    const MecModel model = benchmark::make_benchmark_model(h);
    for (const benchmark::BenchmarkTips tips : {benchmark::BenchmarkTips{0.01, 10.0, 10.0},
                                                benchmark::BenchmarkTips{0.03, 0.5, 4.0}}) {
        const CumulantState init{0.0, Vec2(1.0, 0.7), Vec3(0.5, 0.5, 0.0)};
        const auto traj = evolve(init, h, model, benchmark::to_tip_vector(tips), linspace(0.5, 10.0, 20));
        const auto tilde = to_rotating_first(traj, Propagators(h));
        for (std::size_t i = 0; i < traj.samples.size(); ++i) {
            const double t = traj.samples[i].t;
            const double quad = numerics::integrate([&](double s) { return benchmark::benchmark_lambda(tips, h, s); },
                                                    0.0, t).value;
            for (int j = 0; j < 2; ++j) {
                CHECK(std::abs(lambda_integral_from_measurement(init.s[j], tilde[i][j]) - quad) <= 1e-6);
            }
        }
    }
}

TEST_CASE("friction integral from measurements") {
    CHECK(lambda_integral_from_measurement(1.0, 1.0) == 0.0);
    CHECK(lambda_integral_from_measurement(1.0, std::exp(-1.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(lambda_integral_from_measurement(1.0, -0.5), Error);
    CHECK_THROWS_AS(lambda_integral_from_measurement(0.0, 0.5), Error);

    const HamiltonianParams h = benchmark::benchmark_hamiltonian();
    const benchmark::BenchmarkTips tips{0.01, 10.0, 10.0};
    const CumulantState init{0.0, Vec2(2.0, 0.0), Vec3(0.5, 0.5, 0.0)};
    IntegratorOptions tight{1e-12, 1e-12, 1e-4, 1e-7, true};
    const auto traj = evolve(init, h, benchmark::make_benchmark_model(h), benchmark::to_tip_vector(tips),
                             std::vector<double>{10.0}, tight);
    const double s_tilde = (Propagators(h).exp_tM(-10.0) * traj.samples.back().s)[0];
    CHECK(lambda_integral_from_measurement(2.0, s_tilde) == doctest::Approx(9.70e-2).epsilon(5e-4));
}

TEST_CASE("second-cumulant relation equals the accumulated diffusion") {
    const HamiltonianParams h = benchmark::benchmark_hamiltonian();
    const benchmark::BenchmarkTips tips{0.01, 10.0, 10.0};
    const MecModel model = benchmark::make_benchmark_model(h);
    const Propagators p(h);
    const CumulantState init{0.0, Vec2(1.0, 0.0), Vec3(0.8, 0.5, 0.1)};
    IntegratorOptions tight{1e-12, 1e-12, 1e-4, 1e-7, true};
    const double t = 1.0;
    const auto traj = evolve(init, h, model, benchmark::to_tip_vector(tips), std::vector<double>{t}, tight);
    const double l = benchmark::lambda_integral_closed_form(tips, h, t);
    const Vec3 rel = second_cumulant_integral_relation(traj.samples.back().x, init.x, p, t, l);

    // Direct quadrature of the formal solution, component by component.
    for (int k = 0; k < 3; ++k) {
        const double quad = numerics::integrate(
            [&](double s) {
                const double d = benchmark::benchmark_delta_coeff(tips, h, s);
                const Vec3 v = p.exp_tR(t - s) * Vec3(d, d, 0.0);
                return std::exp(-2.0 * (l - benchmark::lambda_integral_closed_form(tips, h, s))) * v[k];
            },
            0.0, t, numerics::QuadratureOptions{1e-12, 1e-14}).value;
        CHECK(std::abs(rel[k] - quad) <= 1e-6 * std::max(std::abs(quad), 1e-3));
    }
    const Vec3 acc = accumulated_diffusion(h, model, benchmark::to_tip_vector(tips), std::vector<double>{t}, tight).front();
    CHECK((rel - acc).norm() <= 1e-9);
    const Vec3 homogeneous = std::exp(-2.0 * l) * (p.exp_tR(t) * init.x);
    CHECK(second_cumulant_integral_relation(homogeneous, init.x, p, t, l).norm() <= 1e-15);
}

TEST_CASE("tightening the tolerance changes samples by less than the coarse tolerance") {
    const HamiltonianParams h = benchmark::benchmark_hamiltonian();
    const benchmark::BenchmarkTips tips{0.02, 3.0, 5.0};
    const MecModel model = benchmark::make_benchmark_model(h);
    const CumulantState init{0.0, Vec2(1.0, -1.0), Vec3(0.7, 0.5, 0.1)};
    const auto grid = linspace(0.0, 10.0, 41);
    IntegratorOptions coarse;
    IntegratorOptions fine = coarse;
    fine.abs_tol = fine.rel_tol = coarse.abs_tol / 2.0;
    IntegratorOptions reference{1e-13, 1e-13, 1e-4, 1e-7, true};
    const auto a = evolve(init, h, model, benchmark::to_tip_vector(tips), grid, coarse);
    const auto b = evolve(init, h, model, benchmark::to_tip_vector(tips), grid, fine);
    const auto r = evolve(init, h, model, benchmark::to_tip_vector(tips), grid, reference);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double scale = 1.0 + r.samples[i].x.norm() + r.samples[i].s.norm();
        CHECK((a.samples[i].x - b.samples[i].x).norm() <= coarse.abs_tol * scale * 10.0);
        CHECK((a.samples[i].s - b.samples[i].s).norm() <= coarse.abs_tol * scale * 10.0);
    }
}

TEST_CASE("unphysical models are reported") {
    TipVector tips;
    const MecModel m = constant_model_values(0.5, 0.0, 0.0, 0.0, tips);
    const HamiltonianParams h;
    CHECK_THROWS_WITH_AS(evolve(CumulantState{}, h, m, tips, linspace(0.0, 2.0, 5)), doctest::Contains("Robertson"),
                         Error);
    try {
        evolve(CumulantState{}, h, m, tips, linspace(0.0, 2.0, 5));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvariantBreach);
    }

    const MecModel nan_model({}, [](double t, TipSpan) { return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0; },
                             [](double, TipSpan) { return 0.0; }, [](double, TipSpan) { return 0.0; },
                             [](double, TipSpan) { return 0.0; });
    try {
        evolve(CumulantState{}, h, nan_model, TipVector{}, linspace(0.0, 2.0, 5));
        FAIL("expected an integration failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IntegrationFailure);
    }
    CHECK_THROWS_AS(evolve(CumulantState{}, h, m, tips, std::vector<double>{1.0, 0.5}), Error);
}

TEST_CASE("trajectory interpolation and CSV export") {
    TipVector tips;
    const MecModel m = constant_model_values(0.0, 0.1, 0.1, 0.0, tips);
    const HamiltonianParams h;
    const auto traj = evolve(CumulantState{}, h, m, tips, linspace(0.0, 1.0, 11));
    const CumulantState mid = traj.at(0.05);
    CHECK(mid.x[0] == doctest::Approx(0.5 * (traj.samples[0].x[0] + traj.samples[1].x[0])));
    CHECK(traj.at(0.3).x[0] == traj.samples[3].x[0]);
    CHECK_THROWS_AS(traj.at(2.0), Error);
    std::ostringstream os;
    write_trajectory_csv(os, traj, h, m.tip_names(), {"note=x"});
    const std::string csv = os.str();
    CHECK(csv.rfind("# hamiltonian", 0) == 0);
    CHECK(csv.find("# tips lambda=0 d_qq=0.1") != std::string::npos);
    CHECK(csv.find("# note=x\nt,s1,s2,x1,x2,x3\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3 + 1 + 11);
}
