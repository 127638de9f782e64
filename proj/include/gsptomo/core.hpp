// core.hpp: shared domain types, the dimensionless cumulant convention,
// the Hamiltonian generator matrices and the Lindblad-to-coefficient map.
//
// Dynamics run on dimensionless cumulants:
//   s = ( sqrt(m w / hbar) <q>,  <p> / sqrt(m w hbar) )
//   x = ( m w Dq^2 / hbar,  Dp^2 / (m w hbar),  sigma_qp / hbar )
// Physical cumulants are converted at the I/O boundary only.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsptomo/errors.hpp"

namespace gsptomo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

using TipVector = std::vector<double>;
using TipSpan = std::span<const double>;

// Mass, oscillator frequency, q.p coupling delta and hbar. Defaults to
// m = w = hbar = 1, delta = 0.
class HamiltonianParams {
public:
    HamiltonianParams() = default;
    HamiltonianParams(double mass, double omega, double delta = 0.0, double hbar = 1.0);

    double mass() const noexcept { return mass_; }
    double omega() const noexcept { return omega_; }
    double delta() const noexcept { return delta_; }
    double hbar() const noexcept { return hbar_; }

    // delta^2 - omega^2, signed; never square-rooted here.
    double eta_squared() const noexcept { return delta_ * delta_ - omega_ * omega_; }

    bool operator==(const HamiltonianParams&) const = default;

private:
    double mass_{1.0};
    double omega_{1.0};
    double delta_{0.0};
    double hbar_{1.0};
};

struct CumulantState {
    double t{0.0};
    Vec2 s{Vec2::Zero()};
    Vec3 x{0.5, 0.5, 0.0};

    // x0 x1 - x2^2 - 1/4; nonnegative for physical states.
    double robertson_margin() const noexcept { return x[0] * x[1] - x[2] * x[2] - 0.25; }
    // x0 x1 - x2^2, conserved by closed Hamiltonian dynamics.
    double symplectic_invariant() const noexcept { return x[0] * x[1] - x[2] * x[2]; }
};

// Throws Domain unless x0 > 0, x1 > 0 and the Robertson-Schrodinger margin is
// above -tolerance.
void validate_state(const CumulantState& state, double tolerance = 0.0);

struct PhysicalCumulants {
    double mean_q{0.0};
    double mean_p{0.0};
    double var_q{0.0};
    double var_p{0.0};
    double cov_qp{0.0};
};

PhysicalCumulants to_physical(const CumulantState& state, const HamiltonianParams& h);
CumulantState from_physical(const PhysicalCumulants& c, const HamiltonianParams& h, double t = 0.0);

struct MecValues {
    double lambda{0.0};
    double d_qq{0.0};
    double d_pp{0.0};
    double d_qp{0.0};
};

// Friction and diffusion coefficients as functions of time and of an ordered
// vector of time-independent parameters. The model owns the name -> index map.
class MecModel {
public:
    using Coefficient = std::function<double(double t, TipSpan tips)>;
    using DomainCheck = std::function<bool(TipSpan tips)>;

    MecModel(std::vector<std::string> tip_names, Coefficient lambda, Coefficient d_qq,
             Coefficient d_pp, Coefficient d_qp, DomainCheck domain = {});

    const std::vector<std::string>& tip_names() const noexcept { return tip_names_; }
    std::size_t tip_count() const noexcept { return tip_names_.size(); }
    std::size_t index_of(std::string_view name) const;

    // Builds an ordered tip vector from named values; every name must be present.
    TipVector make_tips(const std::map<std::string, double>& named) const;

    // Throws Domain if tips has the wrong size, is non-finite or fails the
    // model's domain predicate.
    void check_tips(TipSpan tips) const;

    double lambda(double t, TipSpan tips) const { return lambda_(t, tips); }
    MecValues evaluate(double t, TipSpan tips) const;

private:
    std::vector<std::string> tip_names_;
    Coefficient lambda_;
    Coefficient d_qq_;
    Coefficient d_pp_;
    Coefficient d_qp_;
    DomainCheck domain_;
};

// Time-independent coefficients with tips named lambda, d_qq, d_pp, d_qp.
MecModel make_constant_model();

// V_j(t) = a_j(t) p + b_j(t) q, j = 1, 2.
struct LindbladCoefficients {
    using ComplexFn = std::function<std::complex<double>(double t)>;
    std::array<ComplexFn, 2> a;
    std::array<ComplexFn, 2> b;
};

// D_qq = (hbar/2) sum|a_j|^2, D_pp = (hbar/2) sum|b_j|^2,
// D_qp = -(hbar/2) Re sum a_j* b_j, lambda = -Im sum a_j* b_j.
MecValues mecs_from_lindblad(const LindbladCoefficients& l, double t, double hbar = 1.0);

// Wraps Lindblad coefficients as a MecModel with no tips.
MecModel make_lindblad_model(LindbladCoefficients l, double hbar = 1.0);

// M = [[delta, w], [-w, -delta]]
Mat2 build_M(const HamiltonianParams& h);
// R = [[2 delta, 0, 2w], [0, -2 delta, -2w], [-w, w, 0]]
Mat3 build_R(const HamiltonianParams& h);

// D(t) = (2/hbar) (m w D_qq, D_pp/(m w), D_qp)
Vec3 build_diffusion_vector(const HamiltonianParams& h, const MecModel& mec, TipSpan tips, double t);
Vec3 diffusion_vector(const HamiltonianParams& h, const MecValues& v);

} // namespace gsptomo
