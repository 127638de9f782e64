// generic_solvers.hpp: least-squares recovery of the parameters of any
// MecModel from cumulants measured at a handful of times.
//
// Integral route: residuals of the rotating-frame relations
//   ln(S~_j(0)/S~_j(t)) - int_0^t lambda
//   X(t) - exp(-2 int lambda) exp(tR) X(0) - (accumulated diffusion)
// Differential route: residuals of the equations of motion with incremental
// ratios in place of derivatives, with M(t), R(t) supplied by the caller.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsptomo/core.hpp"
#include "gsptomo/dynamics.hpp"
#include "gsptomo/numerics.hpp"

namespace gsptomo::generic {

struct FitOptions {
    int max_function_evaluations{2000};
    double ftol{1e-14};
    double xtol{1e-14};
    // Relative step of the central-difference Jacobian.
    double jacobian_step{1e-6};
    IntegratorOptions integrator{1e-12, 1e-12, 1e-4, 1e-7, false};
    numerics::QuadratureOptions quadrature;
};

struct FitResult {
    TipVector tips;
    std::vector<double> residuals;
    double residual_norm{0.0};
    int iterations{0};
    int function_evaluations{0};
    std::string status;
};

// measured: exact or reconstructed dimensionless cumulants at times > 0.
FitResult integral_fit(const MecModel& model, const HamiltonianParams& h, const CumulantState& initial,
                       std::span<const CumulantState> measured, TipVector guess, const FitOptions& options = {});

struct Generators {
    std::function<Mat2(double)> M;
    std::function<Mat3(double)> R;
};

// Time-independent generators of h.
Generators constant_generators(const HamiltonianParams& h);

// Each pair holds the cumulants at t and at t + delta_t (same delta_t for all).
FitResult differential_fit(const MecModel& model, const HamiltonianParams& h, const Generators& generators,
                           std::span<const std::pair<CumulantState, CumulantState>> samples, TipVector guess,
                           const FitOptions& options = {});

} // namespace gsptomo::generic
