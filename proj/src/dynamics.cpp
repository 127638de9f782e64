#include "gsptomo/dynamics.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gsptomo/numerics.hpp"

namespace gsptomo {

namespace odeint = boost::numeric::odeint;

Propagators::Propagators(const HamiltonianParams& h)
    : m_(build_M(h)), r_(build_R(h)), eta_squared_(h.eta_squared()) {}

Mat2 Propagators::exp_tM(double t) const {
    const double z = eta_squared_ * t * t;
    double c = 0.0;
    double s_over_eta = 0.0;
    if (std::abs(z) < 1e-8) {
        // cosh(eta t) = sum z^k/(2k)!, sinh(eta t)/eta = t sum z^k/(2k+1)!
        double term_c = 1.0;
        double term_s = 1.0;
        for (int k = 0; k < 6; ++k) {
            c += term_c;
            s_over_eta += term_s;
            term_c *= z / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            term_s *= z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        }
        s_over_eta *= t;
    } else if (eta_squared_ > 0.0) {
        const double eta = std::sqrt(eta_squared_);
        c = std::cosh(eta * t);
        s_over_eta = std::sinh(eta * t) / eta;
    } else {
        const double big_omega = std::sqrt(-eta_squared_);
        c = std::cos(big_omega * t);
        s_over_eta = std::sin(big_omega * t) / big_omega;
    }
    return c * Mat2::Identity() + s_over_eta * m_;
}

Mat3 Propagators::exp_tR(double t) const {
    return numerics::expm(Mat3(t * r_));
}

CumulantState Trajectory::at(double t) const {
    require(!samples.empty(), ErrorCode::Domain, "empty trajectory");
    require(t >= samples.front().t && t <= samples.back().t, ErrorCode::Domain,
            "interpolation time outside the trajectory");
    const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                     [](const CumulantState& s, double v) { return s.t < v; });
    if (it->t == t || it == samples.begin()) return *it;
    const CumulantState& b = *it;
    const CumulantState& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    CumulantState out;
    out.t = t;
    out.s = (1.0 - w) * a.s + w * b.s;
    out.x = (1.0 - w) * a.x + w * b.x;
    return out;
}

namespace {

void check_grid(std::span<const double> t_grid, double t0) {
    require(!t_grid.empty(), ErrorCode::Domain, "empty time grid");
    require(t_grid.front() >= t0, ErrorCode::Domain, "time grid starts before the initial state");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        require(t_grid[i] > t_grid[i - 1], ErrorCode::Domain, "time grid must be strictly increasing");
    }
}

// Observation times for integrate_times: the start time first, then the grid.
std::vector<double> observation_times(std::span<const double> t_grid, double t0, bool& skip_first) {
    std::vector<double> times;
    times.reserve(t_grid.size() + 1);
    skip_first = t_grid.front() > t0;
    if (skip_first) times.push_back(t0);
    times.insert(times.end(), t_grid.begin(), t_grid.end());
    return times;
}

template <class State, class System, class Observer>
std::size_t run_controlled(System&& system, State& state, const std::vector<double>& times,
                           const IntegratorOptions& options, Observer&& observer) {
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(options.abs_tol,
                                                                              options.rel_tol);
    if (times.size() == 1) {
        observer(state, times.front());
        return 0;
    }
    const double span = times.back() - times.front();
    const double dt = std::min(options.initial_step, span);
    try {
        return odeint::integrate_times(stepper, system, state, times.begin(), times.end(), dt,
                                       observer, odeint::max_step_checker(100000));
    } catch (const Error&) {
        throw;
    } catch (const std::runtime_error& e) {
        fail(ErrorCode::IntegrationFailure, e.what());
    }
}

} // namespace

Trajectory evolve(const CumulantState& initial, const HamiltonianParams& h, const MecModel& mec,
                  TipSpan tips, std::span<const double> t_grid, IntegratorOptions options) {
    validate_state(initial);
    mec.check_tips(tips);
    check_grid(t_grid, initial.t);

    using State = std::array<double, 5>;
    const Mat2 m = build_M(h);
    const Mat3 r = build_R(h);
    const TipVector tip_copy(tips.begin(), tips.end());

    Trajectory out;
    out.tips = tip_copy;
    out.samples.reserve(t_grid.size());
    std::size_t rhs_calls = 0;

    auto system = [&](const State& y, State& dydt, double t) {
        ++rhs_calls;
        const MecValues v = mec.evaluate(t, tip_copy);
        const Vec3 d = diffusion_vector(h, v);
        const Vec2 s(y[0], y[1]);
        const Vec3 x(y[2], y[3], y[4]);
        const Vec2 ds = m * s - v.lambda * s;
        const Vec3 dx = r * x - 2.0 * v.lambda * x + d;
        dydt = {ds[0], ds[1], dx[0], dx[1], dx[2]};
    };

    bool skip_first = false;
    const std::vector<double> times = observation_times(t_grid, initial.t, skip_first);
    bool skipped = !skip_first;
    auto observer = [&](const State& y, double t) {
        if (!skipped) {
            skipped = true;
            return;
        }
        CumulantState sample;
        sample.t = t;
        sample.s = Vec2(y[0], y[1]);
        sample.x = Vec3(y[2], y[3], y[4]);
        if (!sample.s.allFinite() || !sample.x.allFinite()) {
            fail(ErrorCode::IntegrationFailure, "state became non-finite at t=" + std::to_string(t));
        }
        if (options.check_invariants && sample.robertson_margin() < -options.invariant_tol) {
            std::ostringstream os;
            os << "Robertson-Schrodinger margin " << sample.robertson_margin() << " at t=" << t;
            fail(ErrorCode::InvariantBreach, os.str());
        }
        out.samples.push_back(sample);
    };

    State y{initial.s[0], initial.s[1], initial.x[0], initial.x[1], initial.x[2]};
    out.integrator_stats.steps = run_controlled(system, y, times, options, observer);
    out.integrator_stats.rhs_evaluations = rhs_calls;
    out.integrator_stats.abs_tol = options.abs_tol;
    out.integrator_stats.rel_tol = options.rel_tol;
    return out;
}

std::vector<Vec3> accumulated_diffusion(const HamiltonianParams& h, const MecModel& mec, TipSpan tips,
                                        std::span<const double> t_grid, IntegratorOptions options) {
    mec.check_tips(tips);
    check_grid(t_grid, 0.0);

    using State = std::array<double, 3>;
    const Mat3 r = build_R(h);
    const TipVector tip_copy(tips.begin(), tips.end());

    auto system = [&](const State& y, State& dydt, double t) {
        const MecValues v = mec.evaluate(t, tip_copy);
        const Vec3 x(y[0], y[1], y[2]);
        const Vec3 dx = r * x - 2.0 * v.lambda * x + diffusion_vector(h, v);
        dydt = {dx[0], dx[1], dx[2]};
    };

    std::vector<Vec3> out;
    out.reserve(t_grid.size());
    bool skip_first = false;
    const std::vector<double> times = observation_times(t_grid, 0.0, skip_first);
    bool skipped = !skip_first;
    auto observer = [&](const State& y, double) {
        if (!skipped) {
            skipped = true;
            return;
        }
        out.emplace_back(y[0], y[1], y[2]);
    };
    State y{0.0, 0.0, 0.0};
    run_controlled(system, y, times, options, observer);
    return out;
}

std::vector<Vec2> to_rotating_first(const Trajectory& trajectory, const Propagators& p) {
    require(!trajectory.samples.empty(), ErrorCode::Domain, "empty trajectory");
    std::vector<Vec2> out;
    out.reserve(trajectory.samples.size());
    for (const CumulantState& s : trajectory.samples) out.push_back(p.exp_tM(-s.t) * s.s);
    return out;
}

double lambda_integral_from_measurement(double s_tilde_0, double s_tilde_t) {
    require(s_tilde_0 != 0.0 && s_tilde_t != 0.0, ErrorCode::Domain,
            "rotating first cumulant is zero; choose the other component");
    const double ratio = s_tilde_0 / s_tilde_t;
    require(std::isfinite(ratio) && ratio > 0.0, ErrorCode::Domain,
            "rotating first cumulant changed sign between 0 and t");
    return std::log(ratio);
}

Vec3 second_cumulant_integral_relation(const Vec3& x_t, const Vec3& x_0, const Propagators& p, double t,
                                       double lambda_int_0_t) {
    return x_t - std::exp(-2.0 * lambda_int_0_t) * (p.exp_tR(t) * x_0);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory, const HamiltonianParams& h,
                          const std::vector<std::string>& tip_names,
                          const std::vector<std::string>& extra_comments) {
    os << std::setprecision(17);
    os << "# hamiltonian mass=" << h.mass() << " omega=" << h.omega() << " delta=" << h.delta()
       << " hbar=" << h.hbar() << '\n';
    os << "# tips";
    for (std::size_t i = 0; i < trajectory.tips.size(); ++i) {
        const std::string name = i < tip_names.size() ? tip_names[i] : "tip" + std::to_string(i);
        os << ' ' << name << '=' << trajectory.tips[i];
    }
    os << '\n';
    for (const std::string& c : extra_comments) os << "# " << c << '\n';
    os << "t,s1,s2,x1,x2,x3\n";
    for (const CumulantState& s : trajectory.samples) {
        os << s.t << ',' << s.s[0] << ',' << s.s[1] << ',' << s.x[0] << ',' << s.x[1] << ',' << s.x[2]
           << '\n';
    }
}

} // namespace gsptomo
