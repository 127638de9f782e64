#include "gsptomo/generic_solvers.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <cmath>

namespace gsptomo::generic {

namespace {

using ResidualFn = std::function<Eigen::VectorXd(TipSpan)>;

bool in_domain(const MecModel& model, TipSpan tips) {
    try {
        model.check_tips(tips);
        return true;
    } catch (const Error&) {
        return false;
    }
}

struct LeastSquares : Eigen::DenseFunctor<double> {
    LeastSquares(const MecModel& model, ResidualFn f, int n, int m, double step)
        : Eigen::DenseFunctor<double>(n, m), model(model), residual(std::move(f)), step(step) {}

    int operator()(const InputType& x, ValueType& fvec) const {
        const TipSpan tips(x.data(), static_cast<std::size_t>(x.size()));
        if (!in_domain(model, tips)) {
            fvec.setConstant(values(), 1e6);
            return 0;
        }
        fvec = residual(tips);
        return 0;
    }

    int df(const InputType& x, JacobianType& jac) const {
        jac.resize(values(), inputs());
        ValueType f0(values());
        (*this)(x, f0);
        for (int k = 0; k < inputs(); ++k) {
            const double hk = step * std::max(std::abs(x[k]), 1e-8);
            InputType xp = x;
            InputType xm = x;
            xp[k] += hk;
            xm[k] -= hk;
            const bool up = in_domain(model, TipSpan(xp.data(), xp.size()));
            const bool down = in_domain(model, TipSpan(xm.data(), xm.size()));
            ValueType fp(values());
            ValueType fm(values());
            if (up && down) {
                (*this)(xp, fp);
                (*this)(xm, fm);
                jac.col(k) = (fp - fm) / (2.0 * hk);
            } else if (up) {
                (*this)(xp, fp);
                jac.col(k) = (fp - f0) / hk;
            } else {
                (*this)(xm, fm);
                jac.col(k) = (f0 - fm) / hk;
            }
        }
        return 0;
    }

    const MecModel& model;
    ResidualFn residual;
    double step;
};

std::string status_name(Eigen::LevenbergMarquardtSpace::Status s) {
    using namespace Eigen::LevenbergMarquardtSpace;
    switch (s) {
    case RelativeReductionTooSmall: return "relative reduction too small";
    case RelativeErrorTooSmall: return "relative error too small";
    case RelativeErrorAndReductionTooSmall: return "relative error and reduction too small";
    case CosinusTooSmall: return "gradient orthogonal to residuals";
    case TooManyFunctionEvaluation: return "too many function evaluations";
    case FtolTooSmall: return "ftol too small";
    case XtolTooSmall: return "xtol too small";
    case GtolTooSmall: return "gtol too small";
    case ImproperInputParameters: return "improper input parameters";
    default: return "not converged";
    }
}

FitResult minimize(const MecModel& model, ResidualFn f, int residual_count, TipVector guess,
                   const FitOptions& options) {
    model.check_tips(guess);
    const int n = static_cast<int>(guess.size());
    require(residual_count >= n, ErrorCode::Domain, "fewer residual equations than unknown parameters");
    LeastSquares functor(model, std::move(f), n, residual_count, options.jacobian_step);
    Eigen::LevenbergMarquardt<LeastSquares> lm(functor);
    lm.setFtol(options.ftol);
    lm.setXtol(options.xtol);
    lm.setMaxfev(options.max_function_evaluations);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess.data(), n);
    const auto status = lm.minimize(x);

    FitResult out;
    out.tips.assign(x.data(), x.data() + n);
    Eigen::VectorXd r(residual_count);
    functor(x, r);
    out.residuals.assign(r.data(), r.data() + residual_count);
    out.residual_norm = r.norm();
    out.iterations = static_cast<int>(lm.iterations());
    out.function_evaluations = static_cast<int>(lm.nfev());
    out.status = status_name(status);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
        fail(ErrorCode::Domain, "least-squares setup rejected: " + out.status);
    }
    return out;
}

} // namespace

FitResult integral_fit(const MecModel& model, const HamiltonianParams& h, const CumulantState& initial,
                       std::span<const CumulantState> measured, TipVector guess, const FitOptions& options) {
    require(!measured.empty(), ErrorCode::Domain, "no measurements");
    require(initial.t == 0.0, ErrorCode::Domain, "the initial state is taken at t = 0");
    std::vector<double> times;
    for (const CumulantState& s : measured) {
        require(s.t > initial.t, ErrorCode::Domain, "measurement times must follow the initial state");
        require(times.empty() || s.t > times.back(), ErrorCode::Domain, "measurement times must increase");
        times.push_back(s.t);
    }
    const Propagators p(h);
    const bool use_first = initial.s.squaredNorm() > 0.0;
    const int j = std::abs(initial.s[0]) >= std::abs(initial.s[1]) ? 0 : 1;
    std::vector<double> measured_log_ratio;
    if (use_first) {
        for (const CumulantState& s : measured) {
            const Vec2 s_tilde = p.exp_tM(-s.t) * s.s;
            measured_log_ratio.push_back(lambda_integral_from_measurement(initial.s[j], s_tilde[j]));
        }
    }
    const int per_time = use_first ? 4 : 3;
    const std::vector<CumulantState> data(measured.begin(), measured.end());

    ResidualFn f = [=, &model](TipSpan tips) {
        Eigen::VectorXd r(per_time * static_cast<int>(data.size()));
        const std::vector<Vec3> acc = accumulated_diffusion(h, model, tips, times, options.integrator);
        const numerics::ScalarFn lambda = [&](double s) { return model.lambda(s, tips); };
        double lambda_int = 0.0;
        double last = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double t = times[i];
            lambda_int += numerics::integrate(lambda, last, t, options.quadrature).value;
            last = t;
            const Vec3 rel = second_cumulant_integral_relation(data[i].x, initial.x, p, t, lambda_int) - acc[i];
            int k = per_time * static_cast<int>(i);
            if (use_first) r[k++] = measured_log_ratio[i] - lambda_int;
            r.segment<3>(k) = rel;
        }
        return r;
    };
    return minimize(model, std::move(f), per_time * static_cast<int>(data.size()), std::move(guess), options);
}

Generators constant_generators(const HamiltonianParams& h) {
    const Mat2 m = build_M(h);
    const Mat3 r = build_R(h);
    return {[m](double) { return m; }, [r](double) { return r; }};
}

FitResult differential_fit(const MecModel& model, const HamiltonianParams& h, const Generators& generators,
                           std::span<const std::pair<CumulantState, CumulantState>> samples, TipVector guess,
                           const FitOptions& options) {
    require(!samples.empty(), ErrorCode::Domain, "no measurements");
    require(generators.M && generators.R, ErrorCode::Domain, "generator callbacks must be set");
    const std::vector<std::pair<CumulantState, CumulantState>> data(samples.begin(), samples.end());
    for (const auto& [a, b] : data) require(b.t > a.t, ErrorCode::Domain, "second sample must follow the first");

    ResidualFn f = [=, &model](TipSpan tips) {
        Eigen::VectorXd r(5 * static_cast<int>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& [a, b] = data[i];
            const double dt = b.t - a.t;
            const MecValues v = model.evaluate(a.t, tips);
            const Vec2 ds = (b.s - a.s) / dt - (generators.M(a.t) - v.lambda * Mat2::Identity()) * a.s;
            const Vec3 dx = (b.x - a.x) / dt - (generators.R(a.t) - 2.0 * v.lambda * Mat3::Identity()) * a.x -
                            diffusion_vector(h, v);
            r.segment<2>(5 * static_cast<int>(i)) = ds;
            r.segment<3>(5 * static_cast<int>(i) + 2) = dx;
        }
        return r;
    };
    return minimize(model, std::move(f), 5 * static_cast<int>(data.size()), std::move(guess), options);
}

} // namespace gsptomo::generic
