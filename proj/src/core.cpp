#include "gsptomo/core.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

namespace gsptomo {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::InvariantBreach: return "InvariantBreach";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::NoCommonRoot: return "NoCommonRoot";
    case ErrorCode::InvalidDensity: return "InvalidDensity";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DivisionNearZero: return "DivisionNearZero";
    case ErrorCode::Config: return "ConfigError";
    }
    return "Error";
}

HamiltonianParams::HamiltonianParams(double mass, double omega, double delta, double hbar)
    : mass_(mass), omega_(omega), delta_(delta), hbar_(hbar) {
    require(std::isfinite(mass) && mass > 0.0, ErrorCode::Domain, "mass must be positive");
    require(std::isfinite(omega) && omega > 0.0, ErrorCode::Domain, "omega must be positive");
    require(std::isfinite(hbar) && hbar > 0.0, ErrorCode::Domain, "hbar must be positive");
    require(std::isfinite(delta), ErrorCode::Domain, "delta must be finite");
}

void validate_state(const CumulantState& state, double tolerance) {
    require(state.s.allFinite() && state.x.allFinite() && std::isfinite(state.t), ErrorCode::Domain,
            "cumulant state is not finite");
    require(state.x[0] > 0.0 && state.x[1] > 0.0, ErrorCode::Domain,
            "second cumulants x0, x1 must be positive");
    if (state.robertson_margin() < -tolerance) {
        std::ostringstream os;
        os << "Robertson-Schrodinger violated at t=" << state.t
           << " (x0 x1 - x2^2 - 1/4 = " << state.robertson_margin() << ")";
        fail(ErrorCode::Domain, os.str());
    }
}

PhysicalCumulants to_physical(const CumulantState& state, const HamiltonianParams& h) {
    const double mw = h.mass() * h.omega();
    const double hb = h.hbar();
    return {
        .mean_q = state.s[0] * std::sqrt(hb / mw),
        .mean_p = state.s[1] * std::sqrt(mw * hb),
        .var_q = state.x[0] * hb / mw,
        .var_p = state.x[1] * mw * hb,
        .cov_qp = state.x[2] * hb,
    };
}

CumulantState from_physical(const PhysicalCumulants& c, const HamiltonianParams& h, double t) {
    const double mw = h.mass() * h.omega();
    const double hb = h.hbar();
    CumulantState out;
    out.t = t;
    out.s = Vec2(c.mean_q * std::sqrt(mw / hb), c.mean_p / std::sqrt(mw * hb));
    out.x = Vec3(c.var_q * mw / hb, c.var_p / (mw * hb), c.cov_qp / hb);
    return out;
}

MecModel::MecModel(std::vector<std::string> tip_names, Coefficient lambda, Coefficient d_qq,
                   Coefficient d_pp, Coefficient d_qp, DomainCheck domain)
    : tip_names_(std::move(tip_names)),
      lambda_(std::move(lambda)),
      d_qq_(std::move(d_qq)),
      d_pp_(std::move(d_pp)),
      d_qp_(std::move(d_qp)),
      domain_(std::move(domain)) {
    require(lambda_ && d_qq_ && d_pp_ && d_qp_, ErrorCode::Domain,
            "MecModel needs all four coefficient functions");
}

std::size_t MecModel::index_of(std::string_view name) const {
    const auto it = std::find(tip_names_.begin(), tip_names_.end(), name);
    require(it != tip_names_.end(), ErrorCode::Domain, "unknown tip '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - tip_names_.begin());
}

TipVector MecModel::make_tips(const std::map<std::string, double>& named) const {
    TipVector tips(tip_names_.size(), 0.0);
    for (std::size_t i = 0; i < tip_names_.size(); ++i) {
        const auto it = named.find(tip_names_[i]);
        require(it != named.end(), ErrorCode::Domain, "missing tip '" + tip_names_[i] + "'");
        tips[i] = it->second;
    }
    return tips;
}

void MecModel::check_tips(TipSpan tips) const {
    require(tips.size() == tip_names_.size(), ErrorCode::Domain, "tip vector has the wrong size");
    require(std::all_of(tips.begin(), tips.end(), [](double v) { return std::isfinite(v); }),
            ErrorCode::Domain, "tip vector is not finite");
    if (domain_) require(domain_(tips), ErrorCode::Domain, "tip vector outside the model domain");
}

MecValues MecModel::evaluate(double t, TipSpan tips) const {
    return {lambda_(t, tips), d_qq_(t, tips), d_pp_(t, tips), d_qp_(t, tips)};
}

MecModel make_constant_model() {
    return MecModel(
        {"lambda", "d_qq", "d_pp", "d_qp"},
        [](double, TipSpan p) { return p[0]; },
        [](double, TipSpan p) { return p[1]; },
        [](double, TipSpan p) { return p[2]; },
        [](double, TipSpan p) { return p[3]; },
        [](TipSpan p) { return p[1] >= 0.0 && p[2] >= 0.0; });
}

MecValues mecs_from_lindblad(const LindbladCoefficients& l, double t, double hbar) {
    double aa = 0.0;
    double bb = 0.0;
    std::complex<double> ab{0.0, 0.0};
    for (std::size_t j = 0; j < 2; ++j) {
        const std::complex<double> a = l.a[j] ? l.a[j](t) : std::complex<double>{};
        const std::complex<double> b = l.b[j] ? l.b[j](t) : std::complex<double>{};
        aa += std::norm(a);
        bb += std::norm(b);
        ab += std::conj(a) * b;
    }
    return {
        .lambda = -ab.imag(),
        .d_qq = 0.5 * hbar * aa,
        .d_pp = 0.5 * hbar * bb,
        .d_qp = -0.5 * hbar * ab.real(),
    };
}

MecModel make_lindblad_model(LindbladCoefficients l, double hbar) {
    auto shared = std::make_shared<const LindbladCoefficients>(std::move(l));
    auto field = [shared, hbar](double MecValues::*member) {
        return [shared, hbar, member](double t, TipSpan) {
            return mecs_from_lindblad(*shared, t, hbar).*member;
        };
    };
    return MecModel({}, field(&MecValues::lambda), field(&MecValues::d_qq),
                    field(&MecValues::d_pp), field(&MecValues::d_qp));
}

Mat2 build_M(const HamiltonianParams& h) {
    Mat2 m;
    m << h.delta(), h.omega(),
        -h.omega(), -h.delta();
    return m;
}

Mat3 build_R(const HamiltonianParams& h) {
    const double d = h.delta();
    const double w = h.omega();
    Mat3 r;
    r << 2 * d, 0, 2 * w,
         0, -2 * d, -2 * w,
         -w, w, 0;
    return r;
}

Vec3 diffusion_vector(const HamiltonianParams& h, const MecValues& v) {
    const double mw = h.mass() * h.omega();
    return (2.0 / h.hbar()) * Vec3(mw * v.d_qq, v.d_pp / mw, v.d_qp);
}

Vec3 build_diffusion_vector(const HamiltonianParams& h, const MecModel& mec, TipSpan tips, double t) {
    require(t >= 0.0, ErrorCode::Domain, "diffusion vector requested at negative time");
    mec.check_tips(tips);
    return diffusion_vector(h, mec.evaluate(t, tips));
}

} // namespace gsptomo
