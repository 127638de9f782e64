#include "gsptomo/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "gsptomo/numerics.hpp"

namespace gsptomo::tomography {

namespace {

constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Residuals are dimensionless (divided by the spread); this absorbs rounding
// at tangent roots and at the edge of the admissible interval.
constexpr double kZeroTol = 1e-9;

bool same_line(TomogramLine a, TomogramLine b) {
    return std::abs(a.mu - b.mu) <= 1e-12 && std::abs(a.nu - b.nu) <= 1e-12;
}

void check_points_share_line(std::span<const TomogramPoint> points) {
    require(!points.empty(), ErrorCode::Domain, "no tomogram points");
    for (const TomogramPoint& p : points) {
        require(same_line(p.line, points.front().line), ErrorCode::Domain,
                "tomogram points must share one line");
        require(std::isfinite(p.x) && std::isfinite(p.value), ErrorCode::Domain, "non-finite tomogram point");
        require(p.value > 0.0, ErrorCode::InvalidDensity,
                "tomogram value must be positive to take its logarithm (x=" + std::to_string(p.x) + ")");
    }
}

struct CommonRoot {
    bool found{false};
    double value{0.0};
    double mismatch{kInf};
};

// The root of the first set that has the closest partner in every other set.
CommonRoot common_root(const std::vector<std::vector<double>>& root_sets) {
    CommonRoot best;
    if (root_sets.empty()) return best;
    for (const auto& set : root_sets) {
        if (set.empty()) return best;
    }
    for (double a : root_sets.front()) {
        double worst = 0.0;
        double sum = a;
        for (std::size_t k = 1; k < root_sets.size(); ++k) {
            double closest = root_sets[k].front();
            for (double b : root_sets[k]) {
                if (std::abs(b - a) < std::abs(closest - a)) closest = b;
            }
            worst = std::max(worst, std::abs(closest - a) / a);
            sum += closest;
        }
        if (worst < best.mismatch) {
            best.found = true;
            best.mismatch = worst;
            best.value = sum / static_cast<double>(root_sets.size());
        }
    }
    return best;
}

std::vector<double> roots_of(const numerics::ScalarFn& f, double lo, double hi, const RecoveryOptions& o) {
    if (!(hi > lo)) return {};
    numerics::RootScanOptions scan;
    scan.grid_points = o.grid_points;
    scan.spacing = numerics::GridSpacing::Logarithmic;
    scan.rel_tol = o.root_rel_tol;
    scan.zero_tol = kZeroTol;
    return numerics::scan_roots(f, lo, hi, scan).roots;
}

double central_derivative(const numerics::ScalarFn& f, double x) {
    const double h = 1e-6 * x;
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Mean along the line implied by the x = 0 value for a given spread:
// sign * D * sqrt(2 ln(1 / (w0 D sqrt(2 pi)))).
struct PeakRelation {
    double w0;
    double sign;

    double log_term(double d) const {
        double a = 2.0 * std::log(1.0 / (w0 * d * kSqrt2Pi));
        if (a < 0.0) {
            if (a > -1e-12) return 0.0;
            return kNaN;
        }
        return a;
    }
    double mean(double d) const { return sign * d * std::sqrt(log_term(d)); }
};

struct BranchResult {
    Sign branch;
    CommonRoot root;
    double tolerance{0.0};
    std::vector<double> all_roots;
};

} // namespace

TomogramLine make_line(double mu, double nu) {
    require(std::isfinite(mu) && std::isfinite(nu), ErrorCode::Domain, "non-finite line coefficients");
    require(mu != 0.0 || nu != 0.0, ErrorCode::Domain, "line coefficients (mu, nu) must not both vanish");
    return {mu, nu};
}

void PointBudget::record(const TomogramKey& key, int count) {
    require(count >= 0, ErrorCode::Domain, "negative point count");
    int& slot = per_tomogram_[key];
    slot = std::max(slot, count);
}

void PointBudget::merge(const PointBudget& other) {
    for (const auto& [key, count] : other.per_tomogram_) record(key, count);
}

int PointBudget::total() const noexcept {
    int sum = 0;
    for (const auto& [key, count] : per_tomogram_) sum += count;
    return sum;
}

int PointBudget::count(const TomogramKey& key) const {
    const auto it = per_tomogram_.find(key);
    return it == per_tomogram_.end() ? 0 : it->second;
}

LineMoments line_moments(const CumulantState& state, const HamiltonianParams& h, TomogramLine line) {
    const PhysicalCumulants c = to_physical(state, h);
    return {
        .mean = line.mu * c.mean_q + line.nu * c.mean_p,
        .variance = line.mu * line.mu * c.var_q + line.nu * line.nu * c.var_p +
                    2.0 * line.mu * line.nu * c.cov_qp,
    };
}

double gaussian_density(double mean, double variance, double x) {
    const double dx = x - mean;
    return std::exp(-dx * dx / (2.0 * variance)) / (kSqrt2Pi * std::sqrt(variance));
}

double wigner_gaussian(const CumulantState& state, const HamiltonianParams& h, double q, double p) {
    const PhysicalCumulants c = to_physical(state, h);
    const double det = c.var_q * c.var_p - c.cov_qp * c.cov_qp;
    require(det > 0.0, ErrorCode::DegenerateCovariance, "Dq^2 Dp^2 - sigma^2 must be positive");
    const double dq = q - c.mean_q;
    const double dp = p - c.mean_p;
    const double quad = c.var_q * dp * dp + c.var_p * dq * dq - 2.0 * c.cov_qp * dq * dp;
    return std::exp(-quad / (2.0 * det)) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double radon_gaussian(const CumulantState& state, const HamiltonianParams& h, TomogramLine line, double x) {
    const LineMoments m = line_moments(state, h, line);
    require(m.variance > 0.0, ErrorCode::DegenerateLine, "spread along the tomogram line is not positive");
    return gaussian_density(m.mean, m.variance, x);
}

std::vector<TomogramPoint> sample_tomogram(const CumulantState& state, const HamiltonianParams& h,
                                           TomogramLine line, std::span<const double> xs,
                                           double noise_sigma, std::uint64_t rng_seed) {
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::Domain,
            "noise_sigma must be nonnegative");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    std::vector<TomogramPoint> out;
    out.reserve(xs.size());
    for (double x : xs) {
        double value = radon_gaussian(state, h, line, x);
        if (noise_sigma > 0.0) value = std::max(0.0, value + noise(rng));
        out.push_back({line, x, value, noise_sigma});
    }
    return out;
}

std::vector<double> first_cumulant_abscissae(double scale, bool sign_known) {
    require(scale > 0.0, ErrorCode::Domain, "abscissa scale must be positive");
    std::vector<double> xs{0.0, -1.5 * scale, 1.5 * scale};
    if (!sign_known) xs.push_back(0.75 * scale);
    return xs;
}

std::vector<double> covariance_abscissae(double line_mean, double scale) {
    require(scale > 0.0, ErrorCode::Domain, "abscissa scale must be positive");
    return {line_mean + 0.5 * scale, line_mean + 1.5 * scale};
}

MeanVarianceResult recover_mean_and_variance(std::span<const TomogramPoint> points,
                                             std::optional<Sign> sign_known, const RecoveryOptions& options) {
    check_points_share_line(points);

    const TomogramPoint* peak = nullptr;
    std::vector<const TomogramPoint*> others;
    for (const TomogramPoint& p : points) {
        if (p.x == 0.0) {
            if (!peak) peak = &p;
            continue;
        }
        const bool duplicate = std::any_of(others.begin(), others.end(),
                                           [&](const TomogramPoint* o) { return o->x == p.x; });
        if (!duplicate) others.push_back(&p);
    }
    require(peak != nullptr, ErrorCode::Domain, "the point at x = 0 is required");
    const std::size_t needed = sign_known ? 2 : 3;
    require(others.size() >= needed, ErrorCode::Domain,
            "need " + std::to_string(needed) + " points at distinct nonzero x");
    others.resize(needed);

    const double w0 = peak->value;
    const double upper0 = 1.0 / (w0 * kSqrt2Pi);
    double noise = peak->noise_sigma;
    for (const TomogramPoint* p : others) noise = std::max(noise, p->noise_sigma);

    auto run_branch = [&](Sign branch) {
        const PeakRelation peak_rel{w0, static_cast<double>(static_cast<int>(branch))};
        BranchResult br{branch, {}, options.common_root_rel_tol, {}};
        std::vector<std::vector<double>> sets;
        std::vector<numerics::ScalarFn> residuals;
        for (const TomogramPoint* p : others) {
            const double wx = p->value;
            const double x = p->x;
            // 2 ln(1/(w D sqrt(2pi))) - (x/D - mean(D)/D)^2, the transcendental
            // condition divided by D^2.
            numerics::ScalarFn r = [peak_rel, wx, x](double d) {
                const double a = peak_rel.log_term(d);
                if (std::isnan(a)) return kNaN;
                const double u = x / d - peak_rel.sign * std::sqrt(a);
                return 2.0 * std::log(1.0 / (wx * d * kSqrt2Pi)) - u * u;
            };
            const double hi = std::min({options.spread_max, upper0, 1.0 / (wx * kSqrt2Pi)});
            sets.push_back(roots_of(r, options.spread_min, hi, options));
            br.all_roots.insert(br.all_roots.end(), sets.back().begin(), sets.back().end());
            residuals.push_back(std::move(r));
        }
        br.root = common_root(sets);
        if (br.root.found && noise > 0.0) {
            // Implicit-function propagation of the density noise onto each root.
            const double d = br.root.value;
            double worst = 0.0;
            for (std::size_t i = 0; i < others.size(); ++i) {
                const double drdd = central_derivative(residuals[i], d);
                const double a = peak_rel.log_term(d);
                const double u = others[i]->x / d - peak_rel.sign * std::sqrt(std::max(a, 0.0));
                const double dr_dwx = -2.0 / others[i]->value;
                const double dr_da = a > 0.0 ? peak_rel.sign * u / std::sqrt(a) : 0.0;
                const double dr_dw0 = dr_da * (-2.0 / w0);
                const double sd = noise * std::hypot(dr_dwx, dr_dw0) / std::max(std::abs(drdd), 1e-300);
                worst = std::max(worst, sd);
            }
            br.tolerance = std::max(options.common_root_rel_tol, 3.0 * std::sqrt(2.0) * worst / d);
        }
        return br;
    };

    std::vector<BranchResult> branches;
    if (sign_known) {
        branches.push_back(run_branch(*sign_known));
    } else {
        branches.push_back(run_branch(Sign::Positive));
        branches.push_back(run_branch(Sign::Negative));
    }

    const BranchResult* chosen = nullptr;
    for (const BranchResult& b : branches) {
        if (!b.root.found || b.root.mismatch > b.tolerance) continue;
        if (!chosen || b.root.mismatch < chosen->root.mismatch) chosen = &b;
    }
    if (!chosen) {
        std::ostringstream os;
        os << "no spread common to all points";
        for (const BranchResult& b : branches) {
            os << "; branch " << (b.branch == Sign::Positive ? '+' : '-') << " mismatch " << b.root.mismatch
               << " (tolerance " << b.tolerance << ", " << b.all_roots.size() << " roots)";
        }
        fail(ErrorCode::NoCommonRoot, os.str());
    }

    const double d = chosen->root.value;
    const PeakRelation peak_rel{w0, static_cast<double>(static_cast<int>(chosen->branch))};
    const double a = peak_rel.log_term(d);
    MeanVarianceResult out;
    out.mean = peak_rel.sign * d * std::sqrt(std::isnan(a) ? 0.0 : a);
    out.variance = d * d;
    out.used_points = static_cast<int>(1 + needed);
    out.branch = chosen->branch;
    out.root_mismatch = chosen->root.mismatch;
    out.tolerance = chosen->tolerance;
    out.candidate_roots = chosen->all_roots;
    return out;
}

CovarianceResult recover_covariance(std::span<const TomogramPoint> points, double mean_q, double mean_p,
                                    double var_q, double var_p, const HamiltonianParams& h,
                                    const RecoveryOptions& options) {
    check_points_share_line(points);
    const TomogramLine line = points.front().line;
    require(line.mu != 0.0 && line.nu != 0.0, ErrorCode::Domain,
            "the covariance tomogram needs mu nu != 0");
    std::vector<const TomogramPoint*> used;
    for (const TomogramPoint& p : points) {
        const bool duplicate = std::any_of(used.begin(), used.end(),
                                           [&](const TomogramPoint* o) { return o->x == p.x; });
        if (!duplicate) used.push_back(&p);
    }
    require(used.size() >= 2, ErrorCode::Domain, "need two points at distinct x on the covariance tomogram");
    used.resize(2);

    const double mean = line.mu * mean_q + line.nu * mean_p;
    double noise = 0.0;
    std::vector<std::vector<double>> sets;
    std::vector<numerics::ScalarFn> residuals;
    for (const TomogramPoint* p : used) {
        noise = std::max(noise, p->noise_sigma);
        const double wx = p->value;
        const double u0 = p->x - mean;
        numerics::ScalarFn r = [wx, u0](double d) {
            const double u = u0 / d;
            return 2.0 * std::log(1.0 / (wx * d * kSqrt2Pi)) - u * u;
        };
        const double hi = std::min(options.spread_max, 1.0 / (wx * kSqrt2Pi));
        sets.push_back(roots_of(r, options.spread_min, hi, options));
        residuals.push_back(std::move(r));
    }
    const CommonRoot root = common_root(sets);
    double tolerance = options.common_root_rel_tol;
    if (root.found && noise > 0.0) {
        double worst = 0.0;
        for (std::size_t i = 0; i < used.size(); ++i) {
            const double drdd = central_derivative(residuals[i], root.value);
            worst = std::max(worst, noise * (2.0 / used[i]->value) / std::max(std::abs(drdd), 1e-300));
        }
        tolerance = std::max(tolerance, 3.0 * std::sqrt(2.0) * worst / root.value);
    }
    if (!root.found || root.mismatch > tolerance) {
        std::ostringstream os;
        os << "no spread common to both covariance points (mismatch " << root.mismatch << ", tolerance "
           << tolerance << ")";
        fail(ErrorCode::NoCommonRoot, os.str());
    }

    CovarianceResult out;
    out.spread = root.value * root.value;
    out.covariance =
        (out.spread - line.mu * line.mu * var_q - line.nu * line.nu * var_p) / (2.0 * line.mu * line.nu);
    out.used_points = 2;
    out.root_mismatch = root.mismatch;
    const double hbar = h.hbar();
    const double margin = var_q * var_p - out.covariance * out.covariance - 0.25 * hbar * hbar;
    out.robertson_breach = margin < -1e-9 * hbar * hbar;
    return out;
}

CumulantReconstruction reconstruct_cumulants(std::span<const TomogramPoint> q_points,
                                             std::span<const TomogramPoint> p_points,
                                             std::span<const TomogramPoint> diagonal_points,
                                             const HamiltonianParams& h,
                                             std::optional<std::pair<Sign, Sign>> signs, double time,
                                             const RecoveryOptions& options) {
    require(!q_points.empty() && same_line(q_points.front().line, kPositionLine), ErrorCode::Domain,
            "position points must lie on the (1, 0) tomogram");
    require(!p_points.empty() && same_line(p_points.front().line, kMomentumLine), ErrorCode::Domain,
            "momentum points must lie on the (0, 1) tomogram");
    require(!diagonal_points.empty() && same_line(diagonal_points.front().line, kDiagonalLine),
            ErrorCode::Domain, "covariance points must lie on the (1/sqrt2, 1/sqrt2) tomogram");

    CumulantReconstruction out;
    const std::optional<Sign> sq = signs ? std::optional<Sign>(signs->first) : std::nullopt;
    const std::optional<Sign> sp = signs ? std::optional<Sign>(signs->second) : std::nullopt;
    out.q = recover_mean_and_variance(q_points, sq, options);
    out.p = recover_mean_and_variance(p_points, sp, options);
    out.covariance = recover_covariance(diagonal_points, out.q.mean, out.p.mean, out.q.variance,
                                        out.p.variance, h, options);

    const PhysicalCumulants c{out.q.mean, out.p.mean, out.q.variance, out.p.variance, out.covariance.covariance};
    out.state = from_physical(c, h, time);
    out.budget.record({time, kPositionLine}, out.q.used_points);
    out.budget.record({time, kMomentumLine}, out.p.used_points);
    out.budget.record({time, kDiagonalLine}, out.covariance.used_points);
    return out;
}

} // namespace gsptomo::tomography
