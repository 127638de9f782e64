#include "gsptomo/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "gsptomo/dynamics.hpp"
#include "gsptomo/generic_solvers.hpp"
#include "gsptomo/numerics.hpp"
#include "gsptomo/serialization.hpp"
#include "gsptomo/tomography.hpp"

namespace gsptomo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Config: return kExitConfig;
    case ErrorCode::InvariantBreach: return kExitInvariant;
    default: return kExitSolver;
    }
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::Config, "cannot write " + tmp.string());
        f << content;
        if (!f) fail(ErrorCode::Config, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

struct RunContext {
    fs::path dir;
    std::string hash;
};

RunContext context(const ExperimentConfig& c) {
    return {run_directory(c), config_hash(c)};
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

// Tip vectors of the configured model, with the model itself.
struct ModelSetup {
    MecModel model;
    std::vector<TipVector> tips;
};

ModelSetup model_setup(const ExperimentConfig& c) {
    if (c.model == ModelKind::Benchmark) {
        ModelSetup s{benchmark::make_benchmark_model(c.hamiltonian), {}};
        for (const auto& t : c.benchmark_tips) s.tips.push_back(benchmark::to_tip_vector(t));
        return s;
    }
    ModelSetup s{make_constant_model(), {}};
    for (const auto& t : c.custom_tips) s.tips.push_back(s.model.make_tips(t));
    return s;
}

std::vector<std::string> header_comments(const RunContext& ctx, const std::string& what) {
    return {"config_hash=" + ctx.hash, what};
}

// Parallel map over [0, n); each job writes only its own slot.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& job) {
    std::vector<T> out(n);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<reconstruct::Method> methods_of(MethodChoice m) {
    switch (m) {
    case MethodChoice::Integral: return {reconstruct::Method::Integral};
    case MethodChoice::Differential: return {reconstruct::Method::Differential};
    case MethodChoice::Both: return {reconstruct::Method::Integral, reconstruct::Method::Differential};
    }
    return {};
}

std::set<double> schedule_times(const ExperimentConfig& c) {
    const double w = c.hamiltonian.omega();
    const auto& s = c.schedule;
    std::set<double> times{s.omega_t1 / w, s.omega_t2 / w, s.omega_t_temperature.value_or(s.omega_t2) / w};
    if (s.omega_t_held_out) times.insert(*s.omega_t_held_out / w);
    if (c.method != MethodChoice::Integral) {
        for (double t : std::set<double>(times)) times.insert(t + s.omega_delta_t / w);
    }
    return times;
}

// Cumulant recovery from the three standard tomograms at t (10 points, or 8
// with known signs).
tomography::CumulantReconstruction tomographic_state(const CumulantState& exact, const ExperimentConfig& c,
                                                     std::uint64_t seed) {
    const HamiltonianParams& h = c.hamiltonian;
    const auto scale = [&](tomography::TomogramLine l) {
        return std::sqrt(tomography::line_moments(c.probe, h, l).variance);
    };
    const auto line_pts = [&](tomography::TomogramLine l, std::uint64_t k) {
        const auto xs = tomography::first_cumulant_abscissae(scale(l), c.signs_known);
        return tomography::sample_tomogram(exact, h, l, xs, c.noise_sigma, seed * 7919 + k);
    };
    const auto q = line_pts(tomography::kPositionLine, 1);
    const auto p = line_pts(tomography::kMomentumLine, 2);
    std::optional<std::pair<tomography::Sign, tomography::Sign>> signs;
    if (c.signs_known) {
        const auto sign_of = [](double v) { return v < 0.0 ? tomography::Sign::Negative : tomography::Sign::Positive; };
        const PhysicalCumulants pc = to_physical(exact, h);
        signs = std::make_pair(sign_of(pc.mean_q), sign_of(pc.mean_p));
    }
    const tomography::TomogramLine d = tomography::kDiagonalLine;
    // Diagonal points are placed around the mean recovered from q and p.
    const auto mq = tomography::recover_mean_and_variance(q, signs ? std::optional(signs->first) : std::nullopt);
    const auto mp = tomography::recover_mean_and_variance(p, signs ? std::optional(signs->second) : std::nullopt);
    const double line_mean = d.mu * mq.mean + d.nu * mp.mean;
    const auto diag = tomography::sample_tomogram(exact, h, d, tomography::covariance_abscissae(line_mean, scale(d)),
                                                  c.noise_sigma, seed * 7919 + 3);
    tomography::RecoveryOptions opts;
    opts.root_rel_tol = 1e-13;
    return tomography::reconstruct_cumulants(q, p, diag, h, signs, exact.t, opts);
}

reconstruct::ReconstructionReport custom_reconstruction(reconstruct::Method method, const ExperimentConfig& c,
                                                        const TipVector& truth, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const MecModel model = make_constant_model();
    reconstruct::ReconstructionReport r;
    r.method = method;
    r.tip_names = model.tip_names();
    r.tips_true = truth;
    r.tips_found.assign(truth.size(), std::numeric_limits<double>::quiet_NaN());
    try {
        const HamiltonianParams& h = c.hamiltonian;
        const double w = h.omega();
        std::vector<double> base{c.schedule.omega_t1 / w, c.schedule.omega_t2 / w};
        if (c.schedule.omega_t_held_out) base.push_back(*c.schedule.omega_t_held_out / w);
        std::sort(base.begin(), base.end());
        const double dt = c.schedule.omega_delta_t / w;
        std::set<double> grid(base.begin(), base.end());
        if (method == reconstruct::Method::Differential) {
            for (double t : base) grid.insert(t + dt);
        }
        const std::vector<double> times(grid.begin(), grid.end());
        IntegratorOptions io{1e-12, 1e-12, 1e-4, 1e-7, true};
        const Trajectory traj = evolve(c.probe, h, model, truth, times, io);

        std::map<double, CumulantState> measured;
        for (const CumulantState& s : traj.samples) {
            const auto rec = tomographic_state(s, c, seed);
            measured[s.t] = rec.state;
            r.budget.merge(rec.budget);
        }
        TipVector guess = c.custom_guess.empty() ? TipVector{0.1, 0.1, 0.1, 0.0} : model.make_tips(c.custom_guess);
        generic::FitResult fit;
        if (method == reconstruct::Method::Integral) {
            std::vector<CumulantState> data;
            for (double t : base) data.push_back(measured.at(t));
            fit = generic::integral_fit(model, h, c.probe, data, guess);
        } else {
            std::vector<std::pair<CumulantState, CumulantState>> data;
            for (double t : base) data.emplace_back(measured.at(t), measured.at(t + dt));
            fit = generic::differential_fit(model, h, generic::constant_generators(h), data, guess);
        }
        r.tips_found = fit.tips;
        r.residuals = fit.residuals;
        r.diagnostics.iterations = static_cast<std::size_t>(fit.iterations);
        r.diagnostics.notes.push_back("least squares: " + fit.status);
        r.complete = true;
    } catch (const Error& e) {
        r.failure_code = e.code();
        r.failure = e.what();
    }
    r.total_points = r.budget.total();
    r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string report_file_name(const reconstruct::ReconstructionReport& r, std::size_t tip_index, std::uint64_t seed) {
    return reconstruct::to_string(r.method) + (r.rotating_frame ? "_rotating" : "") + "_tip" +
           std::to_string(tip_index) + "_seed" + std::to_string(seed) + ".json";
}

} // namespace

std::vector<reconstruct::ReconstructionReport> reconstruct_all(const ExperimentConfig& c) {
    struct Job {
        reconstruct::Method method;
        std::size_t tip;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    const std::size_t n_tips = c.model == ModelKind::Benchmark ? c.benchmark_tips.size() : c.custom_tips.size();
    for (std::size_t i = 0; i < n_tips; ++i) {
        for (std::uint64_t seed : c.seeds) {
            for (auto m : methods_of(c.method)) jobs.push_back({m, i, seed});
        }
    }
    const MecModel constant = make_constant_model();
    return parallel_map<reconstruct::ReconstructionReport>(jobs.size(), [&](std::size_t k) {
        const Job& job = jobs[k];
        if (c.model == ModelKind::Custom) {
            return custom_reconstruction(job.method, c, constant.make_tips(c.custom_tips[job.tip]), job.seed);
        }
        reconstruct::PipelineOptions opts;
        opts.probe = c.probe;
        opts.signs_known = c.signs_known;
        const bool rotating = c.rotating_frame && job.method == reconstruct::Method::Integral;
        return reconstruct::run_full_reconstruction(job.method, c.benchmark_tips[job.tip], c.hamiltonian, c.schedule,
                                                    {c.noise_sigma, job.seed}, rotating, opts);
    });
}

std::string comparison_table(const std::vector<reconstruct::ReconstructionReport>& reports, bool include_wall_time) {
    std::ostringstream os;
    os << std::left << std::setw(22) << "method" << std::setw(8) << "points" << std::setw(14) << "max|resid|"
       << std::setw(14) << "max rel err" << std::setw(10) << "status";
    if (include_wall_time) os << "wall [s]";
    os << '\n';
    for (const auto& r : reports) {
        double resid = 0.0;
        for (double v : r.residuals) resid = std::max(resid, std::abs(v));
        const std::string name = reconstruct::to_string(r.method) + (r.rotating_frame ? " (rotating)" : "");
        os << std::setw(22) << name << std::setw(8) << r.total_points << std::setw(14) << fmt(resid, 3)
           << std::setw(14) << fmt(reconstruct::max_relative_tip_error(r), 3) << std::setw(10)
           << (r.complete ? "ok" : "failed");
        if (include_wall_time) os << fmt(r.wall_time_seconds, 3);
        os << '\n';
    }
    return os.str();
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
    const RunContext ctx = context(c);
    const ModelSetup setup = model_setup(c);
    const double w = c.hamiltonian.omega();
    std::vector<double> grid(c.simulation_samples);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = c.simulation_omega_t_end / w * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    }
    const auto trajectories = parallel_map<Trajectory>(setup.tips.size(), [&](std::size_t i) {
        return evolve(c.probe, c.hamiltonian, setup.model, setup.tips[i], grid);
    });
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        std::ostringstream csv;
        write_trajectory_csv(csv, trajectories[i], c.hamiltonian, setup.model.tip_names(),
                             header_comments(ctx, c.model == ModelKind::Benchmark ? "model=benchmark" : "model=custom"));
        const fs::path path = ctx.dir / "trajectories" / ("trajectory_tip" + std::to_string(i) + ".csv");
        write_atomic(path, csv.str());
        out << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

int cmd_tomogram(const ExperimentConfig& c, std::ostream& out) {
    const RunContext ctx = context(c);
    const ModelSetup setup = model_setup(c);
    const HamiltonianParams& h = c.hamiltonian;
    const std::set<double> times = schedule_times(c);
    const std::vector<double> grid(times.begin(), times.end());
    const Propagators prop(h);
    for (std::size_t i = 0; i < setup.tips.size(); ++i) {
        const Trajectory traj = evolve(c.probe, h, setup.model, setup.tips[i], grid);
        for (std::uint64_t seed : c.seeds) {
            std::uint64_t counter = 0;
            for (std::size_t k = 0; k < traj.samples.size(); ++k) {
                const CumulantState& s = traj.samples[k];
                std::vector<std::pair<std::string, tomography::TomogramLine>> lines{
                    {"q", tomography::kPositionLine},
                    {"p", tomography::kMomentumLine},
                    {"diag", tomography::kDiagonalLine},
                };
                if (c.rotating_frame) {
                    const Mat2 e = prop.exp_tM(-s.t);
                    const double smw = std::sqrt(h.mass() * h.omega());
                    lines.emplace_back("rotating", tomography::make_line(e(0, 0) * smw, e(0, 1) / smw));
                }
                for (const auto& [name, line] : lines) {
                    const double scale = std::sqrt(tomography::line_moments(c.probe, h, line).variance);
                    const std::vector<double> xs =
                        name == "diag"
                            ? tomography::covariance_abscissae(tomography::line_moments(s, h, line).mean, scale)
                            : tomography::first_cumulant_abscissae(scale, c.signs_known);
                    io::TomogramRecord rec;
                    rec.time = s.t;
                    rec.line = line;
                    rec.noise_sigma = c.noise_sigma;
                    rec.seed = seed * 1000003ULL + counter++;
                    rec.points = tomography::sample_tomogram(s, h, line, xs, c.noise_sigma, rec.seed);
                    json j = io::to_json(rec);
                    j["config_hash"] = ctx.hash;
                    const fs::path path = ctx.dir / "tomograms" /
                                          ("tip" + std::to_string(i) + "_seed" + std::to_string(seed) + "_t" +
                                           std::to_string(k) + "_" + name + ".json");
                    write_atomic(path, j.dump(2) + "\n");
                }
            }
            out << "wrote " << traj.samples.size() << " time slices of tomograms for tip " << i << ", seed " << seed
                << '\n';
        }
    }
    return kExitOk;
}

int cmd_reconstruct(const ExperimentConfig& c, std::ostream& out) {
    const RunContext ctx = context(c);
    const auto reports = reconstruct_all(c);
    const std::size_t per_tip = c.seeds.size() * methods_of(c.method).size();
    int code = kExitOk;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        const std::size_t tip = k / per_tip;
        const std::uint64_t seed = c.seeds[(k % per_tip) / methods_of(c.method).size()];
        json j = io::to_json(r);
        j.erase("wall_time_seconds");
        j["config_hash"] = ctx.hash;
        const fs::path path = ctx.dir / "reports" / report_file_name(r, tip, seed);
        write_atomic(path, j.dump(2) + "\n");
        out << "wrote " << path.string() << '\n';
        if (!r.complete) {
            out << "  failed: " << r.failure << '\n';
            const int c_code = exit_code_for(r.failure_code.value_or(ErrorCode::Domain));
            code = std::max(code, c_code);
        } else {
            out << "  ";
            for (std::size_t i = 0; i < r.tip_names.size(); ++i) {
                out << r.tip_names[i] << '=' << fmt(r.tips_found[i], 8) << ' ';
            }
            out << "points=" << r.total_points << '\n';
        }
    }
    out << '\n' << comparison_table(reports, true);
    if (c.method == MethodChoice::Both) {
        const std::string table = "# config_hash=" + ctx.hash + "\n" + comparison_table(reports, false);
        write_atomic(ctx.dir / "reports" / "comparison.txt", table);
    }
    return code;
}

int cmd_figures(const ExperimentConfig& c, std::ostream& out) {
    const RunContext ctx = context(c);
    const HamiltonianParams& h = c.hamiltonian;
    const double w = h.omega();
    const reconstruct::SearchOptions search;

    struct Curves {
        std::string label;
        reconstruct::Method method;
        std::vector<reconstruct::CurveMeasurement> measurements;
    };
    std::vector<Curves> sets;
    for (auto method : methods_of(c.method)) {
        const std::string key = reconstruct::to_string(method);
        if (auto it = c.figure_measurements.find(key); it != c.figure_measurements.end()) {
            Curves cv{"input", method, {}};
            for (const auto& m : it->second) cv.measurements.push_back({m.omega_t / w, m.value});
            sets.push_back(cv);
            continue;
        }
        require(c.model == ModelKind::Benchmark, ErrorCode::Config, "figures need the benchmark model");
        const MecModel model = benchmark::make_benchmark_model(h);
        const Propagators prop(h);
        const double dt = c.schedule.omega_delta_t / w;
        std::vector<double> times{c.schedule.omega_t1 / w, c.schedule.omega_t2 / w};
        for (std::size_t i = 0; i < c.benchmark_tips.size(); ++i) {
            Curves cv{"tip" + std::to_string(i), method, {}};
            std::set<double> grid(times.begin(), times.end());
            if (method == reconstruct::Method::Differential) {
                for (double t : times) grid.insert(t + dt);
            }
            IntegratorOptions io{1e-12, 1e-12, 1e-4, 1e-7, true};
            const Trajectory traj = evolve(c.probe, h, model, benchmark::to_tip_vector(c.benchmark_tips[i]),
                                           std::vector<double>(grid.begin(), grid.end()), io);
            const int j = std::abs(c.probe.s[0]) >= std::abs(c.probe.s[1]) ? 0 : 1;
            for (double t : times) {
                const CumulantState s = traj.at(t);
                if (method == reconstruct::Method::Integral) {
                    const double s_tilde = (prop.exp_tM(-t) * s.s)[j];
                    cv.measurements.push_back({t, lambda_integral_from_measurement(c.probe.s[j], s_tilde)});
                } else {
                    const PhysicalCumulants a = to_physical(s, h);
                    const PhysicalCumulants b = to_physical(traj.at(t + dt), h);
                    const reconstruct::DifferentialSample ds{t, a.mean_q, b.mean_q, a.mean_p};
                    cv.measurements.push_back({t, reconstruct::differential_measured_factor(ds, dt, h)});
                }
            }
            sets.push_back(cv);
        }
    }

    for (const Curves& cv : sets) {
        require(cv.measurements.size() >= 2, ErrorCode::Config, "figures need at least two measurements");
        const std::string fig = cv.method == reconstruct::Method::Integral ? "fig1" : "fig2";
        const std::string stem = fig + "_" + reconstruct::to_string(cv.method) + "_" + cv.label;
        std::optional<reconstruct::CurveMeasurement> held;
        if (cv.measurements.size() > 2) held = cv.measurements[2];
        const auto sol =
            reconstruct::intersect_curves(cv.method, cv.measurements[0], cv.measurements[1], h, held, search);

        std::ostringstream csv;
        csv << std::setprecision(12);
        csv << "# config_hash=" << ctx.hash << '\n';
        csv << "# intersection omega_c_over_omega=" << sol.omega_c / w << " alpha_sq=" << sol.alpha_sq << '\n';
        csv << "omega_c_over_omega";
        for (const auto& m : cv.measurements) csv << ",alpha_sq_omega_t=" << m.time * w;
        csv << '\n';
        const std::size_t n = search.grid_points;
        for (std::size_t k = 0; k < n; ++k) {
            const double ratio =
                k + 1 == n ? search.ratio_max
                           : search.ratio_min * std::pow(search.ratio_max / search.ratio_min,
                                                         static_cast<double>(k) / static_cast<double>(n - 1));
            csv << ratio;
            for (const auto& m : cv.measurements) {
                const double a = cv.method == reconstruct::Method::Integral
                                     ? reconstruct::integral_curve(ratio * w, m, h)
                                     : reconstruct::differential_curve(ratio * w, m, h);
                csv << ',' << a;
            }
            csv << '\n';
        }
        write_atomic(ctx.dir / "figures" / (stem + "_curves.csv"), csv.str());

        json measurements = json::array();
        for (const auto& m : cv.measurements) measurements.push_back({{"omega_t", m.time * w}, {"value", m.value}});
        const json inter = {
            {"config_hash", ctx.hash},
            {"method", reconstruct::to_string(cv.method)},
            {"measurements", measurements},
            {"omega_c_over_omega", sol.omega_c / w},
            {"alpha_sq", sol.alpha_sq},
            {"roots_considered", sol.roots_considered},
        };
        write_atomic(ctx.dir / "figures" / (stem + "_intersection.json"), inter.dump(2) + "\n");
        out << stem << ": intersection at omega_c/omega = " << fmt(sol.omega_c / w, 8)
            << ", alpha^2 = " << fmt(sol.alpha_sq, 8) << '\n';
    }
    return kExitOk;
}

int cmd_validate(const ExperimentConfig& c, std::ostream& out) {
    const RunContext ctx = context(c);
    const ModelSetup setup = model_setup(c);
    const HamiltonianParams& h = c.hamiltonian;
    const double w = h.omega();
    std::vector<double> grid(c.simulation_samples);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = c.simulation_omega_t_end / w * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    }

    std::ostringstream log;
    bool all = true;
    const auto check = [&](bool ok, const std::string& name, const std::string& detail) {
        all = all && ok;
        log << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    };

    for (std::size_t i = 0; i < setup.tips.size(); ++i) {
        const std::string tag = "tip" + std::to_string(i) + " ";
        IntegratorOptions io;
        io.check_invariants = false;
        const Trajectory traj = evolve(c.probe, h, setup.model, setup.tips[i], grid, io);
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& s : traj.samples) margin = std::min(margin, s.robertson_margin());
        check(margin >= -1e-9, tag + "Robertson-Schrodinger", "min margin " + fmt(margin));

        if (c.model == ModelKind::Benchmark) {
            const auto tips = c.benchmark_tips[i];
            const auto lind = benchmark::lindblad_diagnostic(tips, h, grid);
            log << "[INFO] " << tag << "Lindblad-type condition " << (lind.is_lindblad ? "holds" : "violated")
                << " (min Delta - lambda " << fmt(lind.min_delta_minus_lambda) << ")\n";
            double worst = 0.0;
            const numerics::ScalarFn lambda = [&](double t) { return benchmark::benchmark_lambda(tips, h, t); };
            for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 20)) {
                const double q = grid[k] > 0.0 ? numerics::integrate(lambda, 0.0, grid[k]).value : 0.0;
                worst = std::max(worst, std::abs(q - benchmark::lambda_integral_closed_form(tips, h, grid[k])));
            }
            check(worst <= 1e-10, tag + "closed-form friction integral", "max deviation " + fmt(worst));
        }

        double norm_dev = 0.0;
        for (double t : schedule_times(c)) {
            if (t > grid.back()) continue;
            const CumulantState s = traj.at(t);
            for (auto line : {tomography::kPositionLine, tomography::kMomentumLine, tomography::kDiagonalLine}) {
                const auto m = tomography::line_moments(s, h, line);
                const double sd = std::sqrt(m.variance);
                const numerics::ScalarFn f = [&](double x) { return tomography::radon_gaussian(s, h, line, x); };
                const double total = numerics::integrate(f, m.mean - 12.0 * sd, m.mean + 12.0 * sd).value;
                norm_dev = std::max(norm_dev, std::abs(total - 1.0));
            }
        }
        check(norm_dev <= 1e-8, tag + "tomogram normalization", "max |integral - 1| " + fmt(norm_dev));
    }

    // Closed dynamics conserve the symplectic invariant.
    const MecModel closed = make_constant_model();
    const TipVector zero(closed.tip_count(), 0.0);
    IntegratorOptions tight{1e-12, 1e-12, 1e-4, 1e-7, true};
    const Trajectory free = evolve(c.probe, h, closed, zero, grid, tight);
    double drift = 0.0;
    for (const auto& s : free.samples) {
        drift = std::max(drift, std::abs(s.symplectic_invariant() - c.probe.symplectic_invariant()));
    }
    check(drift <= 1e-8, "closed dynamics symplectic invariant", "max drift " + fmt(drift));

    out << log.str();
    write_atomic(ctx.dir / "reports" / "validate.txt", "# config_hash=" + ctx.hash + "\n" + log.str());
    return all ? kExitOk : kExitInvariant;
}

int run_command(const std::string& name, const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto record = [&](ErrorCode code, const std::string& message) {
        const json j = {{"error", {{"code", std::string(to_string(code))}, {"message", message}, {"command", name}}}};
        err << j.dump() << '\n';
        try {
            write_atomic(run_directory(c) / "error.json", j.dump(2) + "\n");
        } catch (...) {
        }
        return exit_code_for(code);
    };
    try {
        if (name == "simulate") return cmd_simulate(c, out);
        if (name == "tomogram") return cmd_tomogram(c, out);
        if (name == "reconstruct") return cmd_reconstruct(c, out);
        if (name == "figures") return cmd_figures(c, out);
        if (name == "validate") return cmd_validate(c, out);
        return record(ErrorCode::Config, "unknown command '" + name + "'");
    } catch (const Error& e) {
        return record(e.code(), e.what());
    } catch (const fs::filesystem_error& e) {
        return record(ErrorCode::Config, e.what());
    } catch (const std::exception& e) {
        return record(ErrorCode::IntegrationFailure, e.what());
    }
}

} // namespace gsptomo::cli
