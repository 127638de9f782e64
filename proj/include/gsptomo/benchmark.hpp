// benchmark.hpp: quantum Brownian motion in an Ohmic bath with Lorentz-Drude
// cutoff, secular weak-coupling coefficients (high-temperature form).
//
//   lambda(t) = a^2 wc^2 w / (wc^2 + w^2) {1 - e^{-wc t}[cos wt + (wc/w) sin wt]}
//   Delta(t)  = 2 a^2 wc^2 / (wc^2 + w^2) (kT/hbar) {1 - e^{-wc t}[cos wt - (w/wc) sin wt]}
//   delta = 0, D_qp = 0, m w D_qq / hbar = D_pp / (hbar m w) = Delta / 2

#pragma once

#include <span>
#include <vector>

#include "gsptomo/core.hpp"

namespace gsptomo::benchmark {

// alpha^2, cutoff omega_c (same units as omega) and kT/(hbar omega).
struct BenchmarkTips {
    double alpha_sq{0.01};
    double omega_c{10.0};
    double kT_over_hbar_omega{10.0};

    bool operator==(const BenchmarkTips&) const = default;
};

void validate(const BenchmarkTips& tips);

inline constexpr const char* kTipNames[] = {"alpha_sq", "omega_c", "kT_over_hbar_omega"};

TipVector to_tip_vector(const BenchmarkTips& tips);
BenchmarkTips from_tip_vector(TipSpan tips);

// Curly-bracket factors of lambda(t) and Delta(t); both vanish at t = 0 and
// tend to 1.
double lambda_shape(double omega_c, double omega, double t);
double delta_shape(double omega_c, double omega, double t);

double benchmark_lambda(const BenchmarkTips& tips, const HamiltonianParams& h, double t);
double benchmark_delta_coeff(const BenchmarkTips& tips, const HamiltonianParams& h, double t);

double stationary_lambda(const BenchmarkTips& tips, const HamiltonianParams& h);
double stationary_delta(const BenchmarkTips& tips, const HamiltonianParams& h);

// Closed form of int_0^t lambda.
double lambda_integral_closed_form(const BenchmarkTips& tips, const HamiltonianParams& h, double t);
// Same with alpha^2 = 1, i.e. the omega_c- and t-dependent factor alone.
double lambda_integral_unit_coupling(double omega_c, double omega, double t);

struct LindbladReport {
    double min_delta_minus_lambda{0.0};
    double min_delta_plus_lambda{0.0};
    bool is_lindblad{false};
};

LindbladReport lindblad_diagnostic(const BenchmarkTips& tips, const HamiltonianParams& h,
                                   std::span<const double> t_grid);

// Reports flag kT/(hbar omega) below this as outside the high-temperature form.
inline constexpr double kHighTemperatureThreshold = 2.0;
inline bool high_temperature_warning(const BenchmarkTips& tips) {
    return tips.kT_over_hbar_omega < kHighTemperatureThreshold;
}

// delta = 0 Hamiltonian for the benchmark oscillator.
HamiltonianParams benchmark_hamiltonian(double mass = 1.0, double omega = 1.0, double hbar = 1.0);

// MecModel with tips (alpha_sq, omega_c, kT_over_hbar_omega). Throws Domain
// if h.delta() != 0.
MecModel make_benchmark_model(const HamiltonianParams& h);

} // namespace gsptomo::benchmark
