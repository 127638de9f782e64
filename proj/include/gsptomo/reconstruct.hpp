// reconstruct.hpp: recovery of the bath parameters (alpha^2, omega_c, T) of
// the benchmark model from cumulants, either through the time-integrated
// friction (integral route) or through incremental ratios of the cumulants
// (differential route), plus the end-to-end simulated experiment.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gsptomo/benchmark.hpp"
#include "gsptomo/core.hpp"
#include "gsptomo/dynamics.hpp"
#include "gsptomo/numerics.hpp"
#include "gsptomo/tomography.hpp"

namespace gsptomo::reconstruct {

enum class Method { Integral, Differential };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

enum class MeasurementKind {
    FirstCumulantQ,
    FirstCumulantP,
    VarianceQ,
    VarianceP,
    Covariance,
    RotatingFirstCumulant,
    RotatingVariance,
};

std::string to_string(MeasurementKind k);

struct MeasurementRecord {
    double time{0.0};
    MeasurementKind kind{MeasurementKind::FirstCumulantQ};
    double value{0.0};
    tomography::TomogramKey source;
    int points{0};
};

// What the tomogram inversion delivered. A (time, kind) pair is stored once:
// a cumulant obtained while recovering another one is reused, not re-measured.
class MeasurementLedger {
public:
    // Returns false (and keeps the first record) when the pair is already present.
    bool add(const MeasurementRecord& record);
    std::optional<double> find(double time, MeasurementKind kind) const;
    double value(double time, MeasurementKind kind) const;

    const std::vector<MeasurementRecord>& records() const noexcept { return records_; }
    tomography::PointBudget budget() const;

private:
    std::vector<MeasurementRecord> records_;
};

struct SolverDiagnostics {
    std::size_t iterations{0};
    std::vector<std::pair<double, double>> brackets;
    std::vector<std::string> notes;
};

struct ReconstructionReport {
    Method method{Method::Integral};
    bool rotating_frame{false};
    std::vector<std::string> tip_names;
    TipVector tips_found;
    TipVector tips_true;
    std::vector<double> residuals;
    int total_points{0};
    tomography::PointBudget budget;
    std::vector<double> roots_considered;
    SolverDiagnostics diagnostics;
    MeasurementLedger ledger;
    bool complete{false};
    std::optional<ErrorCode> failure_code;
    std::string failure;
    double wall_time_seconds{0.0};
};

// One point of an alpha^2(omega_c) curve: the measured quantity at time t.
// Integral route: ln(S~_j(0)/S~_j(t)); differential route: lambda(t)/omega.
struct CurveMeasurement {
    double time{0.0};
    double value{0.0};
};

// alpha^2 implied by one measurement for a trial omega_c. NaN where the
// model factor is not positive.
double integral_curve(double omega_c, const CurveMeasurement& m, const HamiltonianParams& h);
double differential_curve(double omega_c, const CurveMeasurement& m, const HamiltonianParams& h);

struct SearchOptions {
    // omega_c / omega range and bracketing grid.
    double ratio_min{0.05};
    double ratio_max{100.0};
    std::size_t grid_points{128};
    double rel_tol{1e-10};
};

struct CurveSolution {
    double alpha_sq{0.0};
    double omega_c{0.0};
    std::vector<double> roots_considered;
    SolverDiagnostics diagnostics;
};

// Intersection of the two curves by bracketed root finding on f1 - f2 over
// the omega_c grid. Several crossings are resolved with the held-out
// measurement when given (MultipleRootsError otherwise); none gives NoBracket.
CurveSolution intersect_curves(Method method, const CurveMeasurement& m1, const CurveMeasurement& m2,
                               const HamiltonianParams& h,
                               const std::optional<CurveMeasurement>& held_out = std::nullopt,
                               const SearchOptions& options = {});

CurveSolution integral_solve_alpha_omegac(const CurveMeasurement& m1, const CurveMeasurement& m2,
                                          const HamiltonianParams& h,
                                          const std::optional<CurveMeasurement>& held_out = std::nullopt,
                                          const SearchOptions& options = {});

// Temperature from component j (0 = position row, 1 = momentum row) of the
// second cumulants at time t in the fixed frame.
double integral_solve_temperature(double x_meas, const Vec3& x0, double alpha_sq, double omega_c,
                                  const HamiltonianParams& h, double t, int component = 0,
                                  const numerics::QuadratureOptions& quad = {});

// Same from the variance along the rotating line, (exp(-tR) X(t))_j.
double rotating_solve_temperature(double v_meas, const Vec3& x0, double alpha_sq, double omega_c,
                                  const HamiltonianParams& h, double t, int component = 0,
                                  const numerics::QuadratureOptions& quad = {});

// (c_t_plus - c_t) / delta_t.
double finite_difference(double c_t, double c_t_plus, double delta_t);

// Physical first cumulants at t, plus <q> at t + delta_t.
struct DifferentialSample {
    double time{0.0};
    double mean_q{0.0};
    double mean_q_next{0.0};
    double mean_p{0.0};
};

// (delta <q> + <p>/m - d<q>/dt) / (omega <q>), which equals lambda(t)/omega.
// Throws DivisionNearZero when |<q>| is below 1e-9 sqrt(hbar/(m omega)).
double differential_measured_factor(const DifferentialSample& s, double delta_t, const HamiltonianParams& h);

CurveSolution differential_solve_alpha_omegac(const DifferentialSample& s1, const DifferentialSample& s2,
                                              double delta_t, const HamiltonianParams& h,
                                              const std::optional<DifferentialSample>& held_out = std::nullopt,
                                              const SearchOptions& options = {});

// Physical second cumulants at t plus Dq^2 at t + delta_t.
struct VarianceSample {
    double time{0.0};
    double var_q{0.0};
    double var_q_next{0.0};
    double cov_qp{0.0};
};

// (m/hbar)[dDq^2/dt + 2 (lambda - delta) Dq^2] - 2 sigma/hbar, which equals
// Delta(t)/omega for the benchmark.
double differential_temperature_bracket(const VarianceSample& s, double alpha_sq, double omega_c, double delta_t,
                                        const HamiltonianParams& h);

// Inverts bracket = 2 alpha^2 wc^2/(wc^2 + w^2) (kT/hbar w) {Delta shape}.
// Throws DivisionNearZero when the shape factor is below 1e-12.
double temperature_from_bracket(double bracket, double alpha_sq, double omega_c, const HamiltonianParams& h,
                                double t);

double differential_solve_temperature(const VarianceSample& s, double alpha_sq, double omega_c, double delta_t,
                                      const HamiltonianParams& h);

// Measurement times in units of 1/omega.
struct Schedule {
    double omega_t1{0.5};
    double omega_t2{10.0};
    std::optional<double> omega_t_held_out;
    std::optional<double> omega_t_temperature; // defaults to omega_t2
    double omega_delta_t{1e-3};
};

void validate(const Schedule& s, Method method);

struct NoiseConfig {
    double sigma{0.0};
    std::uint64_t seed{0};
};

struct PipelineOptions {
    // Probe state prepared at t = 0 (dimensionless cumulants).
    CumulantState probe{0.0, Vec2(2.0, 0.0), Vec3(0.5, 0.5, 0.0)};
    IntegratorOptions integrator{1e-12, 1e-12, 1e-4, 1e-7, true};
    tomography::RecoveryOptions recovery{64, 1e-6, 1e3, 1e-13, 1e-6};
    SearchOptions search;
    // Both signs of the first cumulants known in advance (three points per
    // first-cumulant tomogram instead of four).
    bool signs_known{false};
};

// Simulated experiment on the benchmark model: evolve the probe, sample the
// tomograms the method needs, invert them and solve for the parameters.
// Errors are caught and recorded on the report (complete = false).
ReconstructionReport run_full_reconstruction(Method method, const benchmark::BenchmarkTips& truth,
                                             const HamiltonianParams& h, const Schedule& schedule = {},
                                             const NoiseConfig& noise = {}, bool rotating_frame = false,
                                             const PipelineOptions& options = {});

// Maximum relative deviation between found and true tips (infinity for an
// incomplete report).
double max_relative_tip_error(const ReconstructionReport& r);

} // namespace gsptomo::reconstruct
