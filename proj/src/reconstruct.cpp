#include "gsptomo/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gsptomo::reconstruct {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

} // namespace

std::string to_string(Method m) {
    return m == Method::Integral ? "integral" : "differential";
}

Method method_from_string(const std::string& s) {
    if (s == "integral") return Method::Integral;
    if (s == "differential") return Method::Differential;
    fail(ErrorCode::Config, "unknown method '" + s + "'");
}

std::string to_string(MeasurementKind k) {
    switch (k) {
    case MeasurementKind::FirstCumulantQ: return "first_cumulant_q";
    case MeasurementKind::FirstCumulantP: return "first_cumulant_p";
    case MeasurementKind::VarianceQ: return "variance_q";
    case MeasurementKind::VarianceP: return "variance_p";
    case MeasurementKind::Covariance: return "covariance";
    case MeasurementKind::RotatingFirstCumulant: return "rotating_first_cumulant";
    case MeasurementKind::RotatingVariance: return "rotating_variance";
    }
    return "unknown";
}

bool MeasurementLedger::add(const MeasurementRecord& record) {
    require(record.time >= 0.0, ErrorCode::Domain, "measurement time must be nonnegative");
    if (find(record.time, record.kind)) return false;
    records_.push_back(record);
    return true;
}

std::optional<double> MeasurementLedger::find(double time, MeasurementKind kind) const {
    for (const MeasurementRecord& r : records_) {
        if (r.time == time && r.kind == kind) return r.value;
    }
    return std::nullopt;
}

double MeasurementLedger::value(double time, MeasurementKind kind) const {
    const auto v = find(time, kind);
    require(v.has_value(), ErrorCode::Domain, "no " + to_string(kind) + " measurement at t=" + format(time));
    return *v;
}

tomography::PointBudget MeasurementLedger::budget() const {
    tomography::PointBudget b;
    for (const MeasurementRecord& r : records_) b.record(r.source, r.points);
    return b;
}

double integral_curve(double omega_c, const CurveMeasurement& m, const HamiltonianParams& h) {
    const double factor = benchmark::lambda_integral_unit_coupling(omega_c, h.omega(), m.time);
    if (!(factor > 0.0)) return kNaN;
    return m.value / factor;
}

double differential_curve(double omega_c, const CurveMeasurement& m, const HamiltonianParams& h) {
    const double w = h.omega();
    const double shape = benchmark::lambda_shape(omega_c, w, m.time);
    if (!(shape > 0.0)) return kNaN;
    return m.value * (omega_c * omega_c + w * w) / (omega_c * omega_c * shape);
}

CurveSolution intersect_curves(Method method, const CurveMeasurement& m1, const CurveMeasurement& m2,
                               const HamiltonianParams& h, const std::optional<CurveMeasurement>& held_out,
                               const SearchOptions& options) {
    require(std::isfinite(m1.value) && std::isfinite(m2.value), ErrorCode::Domain,
            "measured values must be finite");
    require(m1.time > 0.0 && m2.time > 0.0 && m1.time != m2.time, ErrorCode::Domain,
            "the two measurement times must be positive and distinct");
    require(options.ratio_min > 0.0 && options.ratio_max > options.ratio_min, ErrorCode::Domain,
            "invalid omega_c search range");

    const auto curve = [&](double wc, const CurveMeasurement& m) {
        return method == Method::Integral ? integral_curve(wc, m, h) : differential_curve(wc, m, h);
    };
    // Scale-free difference; same zeros as f1 - f2.
    const numerics::ScalarFn g = [&](double wc) {
        const double f1 = curve(wc, m1);
        const double f2 = curve(wc, m2);
        return (f1 - f2) / (std::abs(f1) + std::abs(f2));
    };

    numerics::RootScanOptions scan;
    scan.grid_points = options.grid_points;
    scan.spacing = numerics::GridSpacing::Logarithmic;
    scan.rel_tol = options.rel_tol;
    const double lo = options.ratio_min * h.omega();
    const double hi = options.ratio_max * h.omega();
    const numerics::ScanResult found = numerics::scan_roots(g, lo, hi, scan);

    CurveSolution out;
    out.roots_considered = found.roots;
    out.diagnostics.iterations = found.iterations;
    out.diagnostics.brackets = found.brackets;

    if (found.roots.empty()) {
        fail(ErrorCode::NoBracket, "the two alpha^2(omega_c) curves do not cross for omega_c/omega in [" +
                                       format(options.ratio_min) + ", " + format(options.ratio_max) + "]");
    }
    double chosen = found.roots.front();
    if (found.roots.size() > 1) {
        std::ostringstream os;
        os << "curves cross " << found.roots.size() << " times at omega_c =";
        for (double r : found.roots) os << ' ' << r;
        if (!held_out) throw MultipleRootsError(os.str() + "; supply a held-out measurement time", found.roots);
        double best = std::numeric_limits<double>::infinity();
        for (double r : found.roots) {
            const double f1 = curve(r, m1);
            const double mismatch = std::abs(curve(r, *held_out) - f1) / std::abs(f1);
            if (mismatch < best) {
                best = mismatch;
                chosen = r;
            }
        }
        out.diagnostics.notes.push_back(os.str() + "; held-out time " + format(held_out->time) + " selects " +
                                        format(chosen));
    }
    out.omega_c = chosen;
    out.alpha_sq = curve(chosen, m1);
    return out;
}

CurveSolution integral_solve_alpha_omegac(const CurveMeasurement& m1, const CurveMeasurement& m2,
                                          const HamiltonianParams& h,
                                          const std::optional<CurveMeasurement>& held_out,
                                          const SearchOptions& options) {
    return intersect_curves(Method::Integral, m1, m2, h, held_out, options);
}

namespace {

void check_partial_tips(double alpha_sq, double omega_c) {
    require(std::isfinite(alpha_sq) && alpha_sq > 0.0, ErrorCode::Domain, "alpha^2 must be positive");
    require(std::isfinite(omega_c) && omega_c > 0.0, ErrorCode::Domain, "omega_c must be positive");
}

// 2 alpha^2 wc^2 w / (wc^2 + w^2): Delta(t) per unit kT/(hbar w) and per unit shape.
double delta_prefactor(double alpha_sq, double omega_c, double omega) {
    const double wc2 = omega_c * omega_c;
    return 2.0 * alpha_sq * wc2 * omega / (wc2 + omega * omega);
}

double checked_temperature(double numerator, double alpha_sq, double omega_c, const HamiltonianParams& h,
                           double integral) {
    require(std::abs(integral) >= 1e-12, ErrorCode::DivisionNearZero,
            "diffusion integral " + format(integral) + " is too small to carry information on T");
    return numerator / (delta_prefactor(alpha_sq, omega_c, h.omega()) * integral);
}

} // namespace

double integral_solve_temperature(double x_meas, const Vec3& x0, double alpha_sq, double omega_c,
                                  const HamiltonianParams& h, double t, int component,
                                  const numerics::QuadratureOptions& quad) {
    check_partial_tips(alpha_sq, omega_c);
    require(component == 0 || component == 1, ErrorCode::Domain, "temperature component must be 0 or 1");
    require(t >= 0.0, ErrorCode::Domain, "negative time");
    const Propagators p(h);
    const double w = h.omega();
    const auto big_l = [&](double s) { return alpha_sq * benchmark::lambda_integral_unit_coupling(omega_c, w, s); };
    const double l_t = big_l(t);
    const double measured = x_meas - std::exp(-2.0 * l_t) * (p.exp_tR(t) * x0)[component];
    const numerics::ScalarFn integrand = [&](double s) {
        const Mat3 e = p.exp_tR(t - s);
        return std::exp(-2.0 * (l_t - big_l(s))) * (e(component, 0) + e(component, 1)) *
               benchmark::delta_shape(omega_c, w, s);
    };
    const double integral = t > 0.0 ? numerics::integrate(integrand, 0.0, t, quad).value : 0.0;
    return checked_temperature(measured, alpha_sq, omega_c, h, integral);
}

double rotating_solve_temperature(double v_meas, const Vec3& x0, double alpha_sq, double omega_c,
                                  const HamiltonianParams& h, double t, int component,
                                  const numerics::QuadratureOptions& quad) {
    check_partial_tips(alpha_sq, omega_c);
    require(component == 0 || component == 1, ErrorCode::Domain, "temperature component must be 0 or 1");
    require(t >= 0.0, ErrorCode::Domain, "negative time");
    const Propagators p(h);
    const double w = h.omega();
    const auto big_l = [&](double s) { return alpha_sq * benchmark::lambda_integral_unit_coupling(omega_c, w, s); };
    const double l_t = big_l(t);
    const double measured = v_meas - std::exp(-2.0 * l_t) * x0[component];
    const numerics::ScalarFn integrand = [&](double s) {
        const Mat3 e = p.exp_tR(-s);
        return std::exp(-2.0 * (l_t - big_l(s))) * (e(component, 0) + e(component, 1)) *
               benchmark::delta_shape(omega_c, w, s);
    };
    const double integral = t > 0.0 ? numerics::integrate(integrand, 0.0, t, quad).value : 0.0;
    return checked_temperature(measured, alpha_sq, omega_c, h, integral);
}

double finite_difference(double c_t, double c_t_plus, double delta_t) {
    require(delta_t > 0.0, ErrorCode::Domain, "delta_t must be positive");
    return (c_t_plus - c_t) / delta_t;
}

double differential_measured_factor(const DifferentialSample& s, double delta_t, const HamiltonianParams& h) {
    const double q_scale = std::sqrt(h.hbar() / (h.mass() * h.omega()));
    require(std::abs(s.mean_q) >= 1e-9 * q_scale, ErrorCode::DivisionNearZero,
            "<q> is too close to zero at t=" + format(s.time) + "; move the measurement time");
    const double dq_dt = finite_difference(s.mean_q, s.mean_q_next, delta_t);
    return (h.delta() * s.mean_q + s.mean_p / h.mass() - dq_dt) / (h.omega() * s.mean_q);
}

CurveSolution differential_solve_alpha_omegac(const DifferentialSample& s1, const DifferentialSample& s2,
                                              double delta_t, const HamiltonianParams& h,
                                              const std::optional<DifferentialSample>& held_out,
                                              const SearchOptions& options) {
    const CurveMeasurement m1{s1.time, differential_measured_factor(s1, delta_t, h)};
    const CurveMeasurement m2{s2.time, differential_measured_factor(s2, delta_t, h)};
    std::optional<CurveMeasurement> m3;
    if (held_out) m3 = CurveMeasurement{held_out->time, differential_measured_factor(*held_out, delta_t, h)};
    return intersect_curves(Method::Differential, m1, m2, h, m3, options);
}

double differential_temperature_bracket(const VarianceSample& s, double alpha_sq, double omega_c, double delta_t,
                                        const HamiltonianParams& h) {
    check_partial_tips(alpha_sq, omega_c);
    const double lambda = benchmark::benchmark_lambda({alpha_sq, omega_c, 1.0}, h, s.time);
    const double d_var = finite_difference(s.var_q, s.var_q_next, delta_t);
    return h.mass() / h.hbar() * (d_var + 2.0 * (lambda - h.delta()) * s.var_q) - 2.0 * s.cov_qp / h.hbar();
}

double temperature_from_bracket(double bracket, double alpha_sq, double omega_c, const HamiltonianParams& h,
                                double t) {
    check_partial_tips(alpha_sq, omega_c);
    const double w = h.omega();
    const double shape = benchmark::delta_shape(omega_c, w, t);
    require(std::abs(shape) >= 1e-12, ErrorCode::DivisionNearZero,
            "Delta(t) shape factor vanishes at t=" + format(t));
    const double wc2 = omega_c * omega_c;
    return bracket * (wc2 + w * w) / (2.0 * alpha_sq * wc2 * shape);
}

double differential_solve_temperature(const VarianceSample& s, double alpha_sq, double omega_c, double delta_t,
                                      const HamiltonianParams& h) {
    const double bracket = differential_temperature_bracket(s, alpha_sq, omega_c, delta_t, h);
    return temperature_from_bracket(bracket, alpha_sq, omega_c, h, s.time);
}

void validate(const Schedule& s, Method method) {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(s.omega_t1) && positive(s.omega_t2), ErrorCode::Config, "measurement times must be positive");
    require(s.omega_t1 != s.omega_t2, ErrorCode::Config, "the two measurement times must differ");
    if (s.omega_t_held_out) {
        require(positive(*s.omega_t_held_out), ErrorCode::Config, "held-out time must be positive");
        require(*s.omega_t_held_out != s.omega_t1 && *s.omega_t_held_out != s.omega_t2, ErrorCode::Config,
                "held-out time must differ from the two measurement times");
    }
    if (s.omega_t_temperature) {
        require(positive(*s.omega_t_temperature), ErrorCode::Config, "temperature time must be positive");
    }
    if (method == Method::Differential) {
        require(positive(s.omega_delta_t), ErrorCode::Config, "delta_t must be positive");
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// The simulated laboratory: exact cumulants on a fixed time grid, turned into
// noisy tomogram points and inverted on demand. Every inversion is logged.
class Experiment {
public:
    Experiment(const HamiltonianParams& h, const PipelineOptions& options, const NoiseConfig& noise,
               ReconstructionReport& report)
        : h_(h), options_(options), noise_(noise), report_(report) {}

    void evolve(const MecModel& model, TipSpan tips, std::set<double> times) {
        const std::vector<double> grid(times.begin(), times.end());
        const Trajectory traj = gsptomo::evolve(options_.probe, h_, model, tips, grid, options_.integrator);
        for (const CumulantState& s : traj.samples) states_[s.t] = s;
        report_.diagnostics.notes.push_back("integrator steps " + std::to_string(traj.integrator_stats.steps) +
                                            ", rhs evaluations " +
                                            std::to_string(traj.integrator_stats.rhs_evaluations));
    }

    tomography::MeanVarianceResult measure_line(double t, tomography::TomogramLine line) {
        const double scale = std::sqrt(tomography::line_moments(options_.probe, h_, line).variance);
        const auto xs = tomography::first_cumulant_abscissae(scale, options_.signs_known);
        const auto points = sample(t, line, xs);
        std::optional<tomography::Sign> sign;
        if (options_.signs_known) {
            sign = tomography::line_moments(state(t), h_, line).mean < 0.0 ? tomography::Sign::Negative
                                                                            : tomography::Sign::Positive;
        }
        return tomography::recover_mean_and_variance(points, sign, options_.recovery);
    }

    // Mean and variance of q (or p) at t, from the ledger when already measured.
    std::pair<double, double> quadrature(double t, bool position) {
        const MeasurementKind mean_kind = position ? MeasurementKind::FirstCumulantQ : MeasurementKind::FirstCumulantP;
        const MeasurementKind var_kind = position ? MeasurementKind::VarianceQ : MeasurementKind::VarianceP;
        if (auto m = report_.ledger.find(t, mean_kind)) return {*m, report_.ledger.value(t, var_kind)};
        const tomography::TomogramLine line = position ? tomography::kPositionLine : tomography::kMomentumLine;
        const auto r = measure_line(t, line);
        log(t, mean_kind, r.mean, line, r.used_points);
        log(t, var_kind, r.variance, line, r.used_points);
        return {r.mean, r.variance};
    }

    double covariance(double t) {
        if (auto c = report_.ledger.find(t, MeasurementKind::Covariance)) return *c;
        const auto [mq, vq] = quadrature(t, true);
        const auto [mp, vp] = quadrature(t, false);
        const tomography::TomogramLine line = tomography::kDiagonalLine;
        const double line_mean = line.mu * mq + line.nu * mp;
        const double scale = std::sqrt(tomography::line_moments(options_.probe, h_, line).variance);
        const auto points = sample(t, line, tomography::covariance_abscissae(line_mean, scale));
        const auto r = tomography::recover_covariance(points, mq, mp, vq, vp, h_, options_.recovery);
        if (r.robertson_breach) {
            report_.diagnostics.notes.push_back("recovered second cumulants at t=" + format(t) +
                                                " violate Robertson-Schrodinger");
        }
        log(t, MeasurementKind::Covariance, r.covariance, line, r.used_points);
        return r.covariance;
    }

    // Line whose mean is sqrt(hbar) (exp(-tM) S(t))_j.
    tomography::TomogramLine rotating_line(double t, int j) const {
        const Mat2 e = Propagators(h_).exp_tM(-t);
        const double smw = std::sqrt(h_.mass() * h_.omega());
        return tomography::make_line(e(j, 0) * smw, e(j, 1) / smw);
    }

    // (S~_j(t), (exp(-tR) X(t))_j) from the rotating tomogram.
    std::pair<double, double> rotating(double t, int j) {
        const double sh = std::sqrt(h_.hbar());
        if (auto m = report_.ledger.find(t, MeasurementKind::RotatingFirstCumulant)) {
            return {*m, report_.ledger.value(t, MeasurementKind::RotatingVariance)};
        }
        const tomography::TomogramLine line = rotating_line(t, j);
        const auto r = measure_line(t, line);
        const double s_tilde = r.mean / sh;
        const double v = r.variance / h_.hbar();
        log(t, MeasurementKind::RotatingFirstCumulant, s_tilde, line, r.used_points);
        log(t, MeasurementKind::RotatingVariance, v, line, r.used_points);
        return {s_tilde, v};
    }

    const CumulantState& state(double t) const {
        const auto it = states_.find(t);
        require(it != states_.end(), ErrorCode::Domain, "time " + format(t) + " missing from the simulation grid");
        return it->second;
    }

private:
    std::vector<tomography::TomogramPoint> sample(double t, tomography::TomogramLine line,
                                                  const std::vector<double>& xs) {
        const std::uint64_t seed = splitmix64(noise_.seed ^ splitmix64(++tomogram_counter_));
        return tomography::sample_tomogram(state(t), h_, line, xs, noise_.sigma, seed);
    }

    void log(double t, MeasurementKind kind, double value, tomography::TomogramLine line, int points) {
        report_.ledger.add({t, kind, value, {t, line}, points});
    }

    const HamiltonianParams& h_;
    const PipelineOptions& options_;
    const NoiseConfig& noise_;
    ReconstructionReport& report_;
    std::map<double, CumulantState> states_;
    std::uint64_t tomogram_counter_{0};
};

int dominant_component(const Vec2& s) {
    require(s.squaredNorm() > 0.0, ErrorCode::Domain, "the probe needs a nonzero first cumulant");
    return std::abs(s[0]) >= std::abs(s[1]) ? 0 : 1;
}

void solve_integral(Experiment& lab, ReconstructionReport& report, const HamiltonianParams& h, double t1,
                    double t2, std::optional<double> th, double tt, const PipelineOptions& options,
                    bool rotating) {
    const Propagators prop(h);
    const int j = dominant_component(options.probe.s);
    const double s0 = options.probe.s[j];
    const double q_unit = std::sqrt(h.hbar() / (h.mass() * h.omega()));
    const double p_unit = std::sqrt(h.mass() * h.omega() * h.hbar());

    const auto log_ratio = [&](double t) {
        double s_tilde = 0.0;
        if (rotating) {
            s_tilde = lab.rotating(t, j).first;
        } else {
            const Vec2 s(lab.quadrature(t, true).first / q_unit, lab.quadrature(t, false).first / p_unit);
            s_tilde = (prop.exp_tM(-t) * s)[j];
        }
        return CurveMeasurement{t, lambda_integral_from_measurement(s0, s_tilde)};
    };

    const CurveMeasurement m1 = log_ratio(t1);
    const CurveMeasurement m2 = log_ratio(t2);
    std::optional<CurveMeasurement> m3;
    if (th) m3 = log_ratio(*th);
    const double measured = rotating ? lab.rotating(tt, j).second
                                     : lab.quadrature(tt, true).second * h.mass() * h.omega() / h.hbar();
    const CurveSolution sol = integral_solve_alpha_omegac(m1, m2, h, m3, options.search);
    report.roots_considered = sol.roots_considered;
    report.diagnostics.iterations += sol.diagnostics.iterations;
    report.diagnostics.brackets = sol.diagnostics.brackets;
    for (const auto& n : sol.diagnostics.notes) report.diagnostics.notes.push_back(n);
    report.tips_found[0] = sol.alpha_sq;
    report.tips_found[1] = sol.omega_c;
    report.residuals.push_back((integral_curve(sol.omega_c, m1, h) - sol.alpha_sq) / sol.alpha_sq);
    report.residuals.push_back((integral_curve(sol.omega_c, m2, h) - sol.alpha_sq) / sol.alpha_sq);

    const double kt = rotating
                          ? rotating_solve_temperature(measured, options.probe.x, sol.alpha_sq, sol.omega_c, h, tt, j)
                          : integral_solve_temperature(measured, options.probe.x, sol.alpha_sq, sol.omega_c, h, tt, 0);
    report.tips_found[2] = kt;
    // Temperature equation checked against the exact benchmark forward model.
    const benchmark::BenchmarkTips found{sol.alpha_sq, sol.omega_c, kt};
    const std::vector<double> grid{tt};
    const Vec3 acc = accumulated_diffusion(h, benchmark::make_benchmark_model(h), benchmark::to_tip_vector(found),
                                           grid, options.integrator)
                         .front();
    const double l = benchmark::lambda_integral_closed_form(found, h, tt);
    double predicted = 0.0;
    if (rotating) {
        predicted = std::exp(-2.0 * l) * options.probe.x[j] + (prop.exp_tR(-tt) * acc)[j];
    } else {
        predicted = std::exp(-2.0 * l) * (prop.exp_tR(tt) * options.probe.x)[0] + acc[0];
    }
    report.residuals.push_back((measured - predicted) / measured);
}

void solve_differential(Experiment& lab, ReconstructionReport& report, const HamiltonianParams& h, double t1,
                        double t2, std::optional<double> th, double tt, double dt,
                        const PipelineOptions& options) {
    const auto sample_at = [&](double t) {
        DifferentialSample s;
        s.time = t;
        s.mean_q = lab.quadrature(t, true).first;
        s.mean_q_next = lab.quadrature(t + dt, true).first;
        s.mean_p = lab.quadrature(t, false).first;
        return s;
    };
    const DifferentialSample s1 = sample_at(t1);
    const DifferentialSample s2 = sample_at(t2);
    std::optional<DifferentialSample> s3;
    if (th) s3 = sample_at(*th);
    VarianceSample v;
    v.time = tt;
    v.var_q = lab.quadrature(tt, true).second;
    v.var_q_next = lab.quadrature(tt + dt, true).second;
    v.cov_qp = lab.covariance(tt);
    const CurveSolution sol = differential_solve_alpha_omegac(s1, s2, dt, h, s3, options.search);
    report.roots_considered = sol.roots_considered;
    report.diagnostics.iterations += sol.diagnostics.iterations;
    report.diagnostics.brackets = sol.diagnostics.brackets;
    for (const auto& n : sol.diagnostics.notes) report.diagnostics.notes.push_back(n);
    report.tips_found[0] = sol.alpha_sq;
    report.tips_found[1] = sol.omega_c;
    for (const DifferentialSample& s : {s1, s2}) {
        const CurveMeasurement m{s.time, differential_measured_factor(s, dt, h)};
        report.residuals.push_back((differential_curve(sol.omega_c, m, h) - sol.alpha_sq) / sol.alpha_sq);
    }

    const double bracket = differential_temperature_bracket(v, sol.alpha_sq, sol.omega_c, dt, h);
    const double kt = temperature_from_bracket(bracket, sol.alpha_sq, sol.omega_c, h, tt);
    report.tips_found[2] = kt;
    const double predicted = benchmark::benchmark_delta_coeff({sol.alpha_sq, sol.omega_c, kt}, h, tt) / h.omega();
    report.residuals.push_back((bracket - predicted) / bracket);
}

} // namespace

ReconstructionReport run_full_reconstruction(Method method, const benchmark::BenchmarkTips& truth,
                                             const HamiltonianParams& h, const Schedule& schedule,
                                             const NoiseConfig& noise, bool rotating_frame,
                                             const PipelineOptions& options) {
    benchmark::validate(truth);
    validate(schedule, method);
    validate_state(options.probe);
    require(noise.sigma >= 0.0 && std::isfinite(noise.sigma), ErrorCode::Config, "noise sigma must be nonnegative");
    require(!(rotating_frame && method == Method::Differential), ErrorCode::Config,
            "the rotating frame applies to the integral method only");

    const auto start = std::chrono::steady_clock::now();
    ReconstructionReport report;
    report.method = method;
    report.rotating_frame = rotating_frame;
    report.tip_names.assign(std::begin(benchmark::kTipNames), std::end(benchmark::kTipNames));
    report.tips_true = benchmark::to_tip_vector(truth);
    report.tips_found.assign(3, kNaN);
    if (benchmark::high_temperature_warning(truth)) {
        report.diagnostics.notes.push_back("kT/(hbar omega) below " + format(benchmark::kHighTemperatureThreshold) +
                                           ": outside the high-temperature form of the coefficients");
    }

    const double w = h.omega();
    const double t1 = schedule.omega_t1 / w;
    const double t2 = schedule.omega_t2 / w;
    const std::optional<double> th =
        schedule.omega_t_held_out ? std::optional<double>(*schedule.omega_t_held_out / w) : std::nullopt;
    const double tt = schedule.omega_t_temperature.value_or(schedule.omega_t2) / w;
    const double dt = schedule.omega_delta_t / w;

    std::set<double> times{t1, t2, tt};
    if (th) times.insert(*th);
    if (method == Method::Differential) {
        for (double t : std::set<double>(times)) times.insert(t + dt);
    }

    Experiment lab(h, options, noise, report);
    try {
        const MecModel model = benchmark::make_benchmark_model(h);
        const TipVector tips = benchmark::to_tip_vector(truth);
        lab.evolve(model, tips, times);
        if (method == Method::Integral) {
            solve_integral(lab, report, h, t1, t2, th, tt, options, rotating_frame);
        } else {
            solve_differential(lab, report, h, t1, t2, th, tt, dt, options);
        }
        report.complete = true;
    } catch (const Error& e) {
        report.failure_code = e.code();
        report.failure = e.what();
    }
    report.budget = report.ledger.budget();
    report.total_points = report.budget.total();
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double max_relative_tip_error(const ReconstructionReport& r) {
    if (!r.complete || r.tips_found.size() != r.tips_true.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < r.tips_found.size(); ++i) {
        const double e = std::abs(r.tips_found[i] - r.tips_true[i]) / std::abs(r.tips_true[i]);
        if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, e);
    }
    return worst;
}

} // namespace gsptomo::reconstruct
