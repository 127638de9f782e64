#include "gsptomo/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace gsptomo::benchmark {

void validate(const BenchmarkTips& tips) {
    require(std::isfinite(tips.alpha_sq) && tips.alpha_sq > 0.0, ErrorCode::Domain, "alpha_sq must be positive");
    require(std::isfinite(tips.omega_c) && tips.omega_c > 0.0, ErrorCode::Domain, "omega_c must be positive");
    require(std::isfinite(tips.kT_over_hbar_omega) && tips.kT_over_hbar_omega > 0.0, ErrorCode::Domain,
            "kT/(hbar omega) must be positive");
}

TipVector to_tip_vector(const BenchmarkTips& tips) {
    return {tips.alpha_sq, tips.omega_c, tips.kT_over_hbar_omega};
}

BenchmarkTips from_tip_vector(TipSpan tips) {
    require(tips.size() == 3, ErrorCode::Domain, "benchmark tip vector has three entries");
    return {tips[0], tips[1], tips[2]};
}

namespace {

// phi_k(x) = sum_n x^n / (n + k)!, i.e. (e^x - 1)/x for k = 1 and
// (e^x - 1 - x)/x^2 for k = 2, without cancellation near x = 0.
std::complex<double> phi(int k, std::complex<double> x) {
    if (std::abs(x) >= 1.0) {
        const std::complex<double> e = std::exp(x);
        return k == 1 ? (e - 1.0) / x : (e - 1.0 - x) / (x * x);
    }
    double factorial = k == 1 ? 1.0 : 2.0;
    std::complex<double> term = 1.0 / factorial;
    std::complex<double> sum = term;
    for (int n = 1; n < 40 && std::abs(term) > 1e-18 * std::abs(sum); ++n) {
        term *= x / static_cast<double>(n + k);
        sum += term;
    }
    return sum;
}

// Both shapes and the friction integral follow from int_0^t e^{(-wc + i w) s} ds.
std::complex<double> rate(double omega_c, double omega) { return {-omega_c, omega}; }

} // namespace

double lambda_shape(double omega_c, double omega, double t) {
    const double n = omega_c * omega_c + omega * omega;
    return n / omega * t * phi(1, rate(omega_c, omega) * t).imag();
}

double delta_shape(double omega_c, double omega, double t) {
    const double n = omega_c * omega_c + omega * omega;
    return n / omega_c * t * phi(1, rate(omega_c, omega) * t).real();
}

double stationary_lambda(const BenchmarkTips& tips, const HamiltonianParams& h) {
    const double wc2 = tips.omega_c * tips.omega_c;
    const double w = h.omega();
    return tips.alpha_sq * wc2 * w / (wc2 + w * w);
}

double stationary_delta(const BenchmarkTips& tips, const HamiltonianParams& h) {
    const double wc2 = tips.omega_c * tips.omega_c;
    const double w = h.omega();
    const double kT_over_hbar = tips.kT_over_hbar_omega * w;
    return 2.0 * tips.alpha_sq * wc2 / (wc2 + w * w) * kT_over_hbar;
}

double benchmark_lambda(const BenchmarkTips& tips, const HamiltonianParams& h, double t) {
    require(t >= 0.0, ErrorCode::Domain, "negative time");
    return stationary_lambda(tips, h) * lambda_shape(tips.omega_c, h.omega(), t);
}

double benchmark_delta_coeff(const BenchmarkTips& tips, const HamiltonianParams& h, double t) {
    require(t >= 0.0, ErrorCode::Domain, "negative time");
    return stationary_delta(tips, h) * delta_shape(tips.omega_c, h.omega(), t);
}

double lambda_integral_unit_coupling(double omega_c, double omega, double t) {
    return omega_c * omega_c * t * t * phi(2, rate(omega_c, omega) * t).imag();
}

double lambda_integral_closed_form(const BenchmarkTips& tips, const HamiltonianParams& h, double t) {
    require(t >= 0.0, ErrorCode::Domain, "negative time");
    return tips.alpha_sq * lambda_integral_unit_coupling(tips.omega_c, h.omega(), t);
}

LindbladReport lindblad_diagnostic(const BenchmarkTips& tips, const HamiltonianParams& h,
                                   std::span<const double> t_grid) {
    require(!t_grid.empty(), ErrorCode::Domain, "empty grid");
    LindbladReport out;
    out.min_delta_minus_lambda = std::numeric_limits<double>::infinity();
    out.min_delta_plus_lambda = std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        const double l = benchmark_lambda(tips, h, t);
        const double d = benchmark_delta_coeff(tips, h, t);
        out.min_delta_minus_lambda = std::min(out.min_delta_minus_lambda, d - l);
        out.min_delta_plus_lambda = std::min(out.min_delta_plus_lambda, d + l);
    }
    out.is_lindblad = out.min_delta_minus_lambda >= 0.0 && out.min_delta_plus_lambda >= 0.0;
    return out;
}

HamiltonianParams benchmark_hamiltonian(double mass, double omega, double hbar) {
    return HamiltonianParams(mass, omega, 0.0, hbar);
}

MecModel make_benchmark_model(const HamiltonianParams& h) {
    require(h.delta() == 0.0, ErrorCode::Domain, "the benchmark model has delta = 0");
    const double mw = h.mass() * h.omega();
    const double hbar = h.hbar();
    auto lambda = [h](double t, TipSpan p) { return benchmark_lambda(from_tip_vector(p), h, t); };
    auto d_qq = [h, mw, hbar](double t, TipSpan p) {
        return hbar * benchmark_delta_coeff(from_tip_vector(p), h, t) / (2.0 * mw);
    };
    auto d_pp = [h, mw, hbar](double t, TipSpan p) {
        return hbar * mw * benchmark_delta_coeff(from_tip_vector(p), h, t) / 2.0;
    };
    auto d_qp = [](double, TipSpan) { return 0.0; };
    auto domain = [](TipSpan p) { return p.size() == 3 && p[0] > 0.0 && p[1] > 0.0 && p[2] > 0.0; };
    return MecModel({kTipNames[0], kTipNames[1], kTipNames[2]}, lambda, d_qq, d_pp, d_qp, domain);
}

} // namespace gsptomo::benchmark
