// dynamics.hpp: cumulant evolution under a time-local Gaussian master
// equation, closed-form propagators and the rotating-frame relations.
//
//   dS/dt = (M - lambda(t) I2) S
//   dX/dt = (R - 2 lambda(t) I3) X + D(t)

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gsptomo/core.hpp"

namespace gsptomo {

// exp(tM) in closed form and exp(tR) by dense Pade exponential, for a fixed
// Hamiltonian. eta^2 = delta^2 - omega^2 picks the hyperbolic or the
// trigonometric branch; |eta^2| t^2 < 1e-8 uses a Taylor series.
class Propagators {
public:
    explicit Propagators(const HamiltonianParams& h);

    Mat2 exp_tM(double t) const;
    Mat3 exp_tR(double t) const;
    double eta_squared() const noexcept { return eta_squared_; }
    const Mat2& M() const noexcept { return m_; }
    const Mat3& R() const noexcept { return r_; }

private:
    Mat2 m_;
    Mat3 r_;
    double eta_squared_;
};

inline Propagators make_propagators(const HamiltonianParams& h) { return Propagators(h); }

struct IntegratorOptions {
    double abs_tol{1e-9};
    double rel_tol{1e-9};
    double initial_step{1e-3};
    // Allowed Robertson-Schrodinger undershoot before InvariantBreach.
    double invariant_tol{1e-7};
    bool check_invariants{true};
};

struct IntegratorStats {
    std::size_t steps{0};
    std::size_t rhs_evaluations{0};
    double abs_tol{0.0};
    double rel_tol{0.0};
};

struct Trajectory {
    std::vector<CumulantState> samples;
    TipVector tips;
    IntegratorStats integrator_stats;

    // Linear interpolation between samples; exact on sample times.
    CumulantState at(double t) const;
};

// Integrates the cumulant equations from `initial` and samples at t_grid
// (strictly increasing, t_grid[0] >= initial.t). Throws IntegrationFailure if
// the step controller gives up and InvariantBreach if a sample violates
// Robertson-Schrodinger beyond options.invariant_tol.
Trajectory evolve(const CumulantState& initial, const HamiltonianParams& h, const MecModel& mec,
                  TipSpan tips, std::span<const double> t_grid, IntegratorOptions options = {});

// Particular solution of the second-cumulant equation with X(0) = 0, i.e.
// int_0^t exp(-2 int_t'^t lambda) exp((t-t')R) D(t') dt', sampled at t_grid.
std::vector<Vec3> accumulated_diffusion(const HamiltonianParams& h, const MecModel& mec, TipSpan tips,
                                        std::span<const double> t_grid, IntegratorOptions options = {});

// S~(t) = exp(-tM) S(t) for every sample.
std::vector<Vec2> to_rotating_first(const Trajectory& trajectory, const Propagators& p);

// int_0^t lambda = ln(S~_j(0) / S~_j(t)). Throws Domain when the ratio is not
// strictly positive (a zero crossing or a sign flip between the two values).
double lambda_integral_from_measurement(double s_tilde_0, double s_tilde_t);

// X(t) - exp(tR) exp(-2 int_0^t lambda) X(0); equals accumulated_diffusion at t
// for the true dynamics.
Vec3 second_cumulant_integral_relation(const Vec3& x_t, const Vec3& x_0, const Propagators& p, double t,
                                       double lambda_int_0_t);

// CSV with columns t,s1,s2,x1,x2,x3 preceded by '#' comment lines carrying the
// Hamiltonian, the tips and any extra comment lines supplied by the caller.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory, const HamiltonianParams& h,
                          const std::vector<std::string>& tip_names,
                          const std::vector<std::string>& extra_comments = {});

} // namespace gsptomo
