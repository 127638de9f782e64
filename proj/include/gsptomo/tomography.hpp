// tomography.hpp: Gaussian symplectic tomograms (Radon transform of the
// Wigner function along X - mu q - nu p = 0) and the finite-point inversion
// that recovers the five cumulants from eight to ten tomogram values.
//
// Everything here works in physical units (q, p, hbar as given by the
// HamiltonianParams); conversion to the dimensionless cumulants happens in
// reconstruct_cumulants.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gsptomo/core.hpp"

namespace gsptomo::tomography {

struct TomogramLine {
    double mu{1.0};
    double nu{0.0};

    auto operator<=>(const TomogramLine&) const = default;
};

// Throws Domain for (0, 0) or non-finite coefficients.
TomogramLine make_line(double mu, double nu);

inline constexpr TomogramLine kPositionLine{1.0, 0.0};
inline constexpr TomogramLine kMomentumLine{0.0, 1.0};
inline constexpr TomogramLine kDiagonalLine{0.70710678118654752440, 0.70710678118654752440};

struct TomogramPoint {
    TomogramLine line;
    double x{0.0};
    double value{0.0};
    double noise_sigma{0.0};
};

// A tomogram (line) measured at a given time.
struct TomogramKey {
    double time{0.0};
    TomogramLine line;

    auto operator<=>(const TomogramKey&) const = default;
};

// Tomographic points per tomogram. Points taken on one tomogram at one time
// are shared by every quantity derived from it, so recording the same key
// twice keeps the larger count.
class PointBudget {
public:
    void record(const TomogramKey& key, int count);
    void merge(const PointBudget& other);

    const std::map<TomogramKey, int>& per_tomogram() const noexcept { return per_tomogram_; }
    int total() const noexcept;
    int count(const TomogramKey& key) const;

private:
    std::map<TomogramKey, int> per_tomogram_;
};

struct LineMoments {
    double mean{0.0};
    double variance{0.0};
};

// Mean mu<q> + nu<p> and spread mu^2 Dq^2 + nu^2 Dp^2 + 2 mu nu sigma.
LineMoments line_moments(const CumulantState& state, const HamiltonianParams& h, TomogramLine line);

double gaussian_density(double mean, double variance, double x);

// Gaussian Wigner function at (q, p). Throws DegenerateCovariance if
// Dq^2 Dp^2 - sigma^2 <= 0.
double wigner_gaussian(const CumulantState& state, const HamiltonianParams& h, double q, double p);

// Marginal density of mu q + nu p at x. Throws DegenerateLine if the spread
// along the line is not positive.
double radon_gaussian(const CumulantState& state, const HamiltonianParams& h, TomogramLine line, double x);

// Exact marginal values plus independent N(0, noise_sigma^2) perturbations,
// clamped at zero. The generator is local to the call and seeded by rng_seed.
std::vector<TomogramPoint> sample_tomogram(const CumulantState& state, const HamiltonianParams& h,
                                           TomogramLine line, std::span<const double> xs,
                                           double noise_sigma, std::uint64_t rng_seed);

// Abscissae for one first-cumulant tomogram: x = 0, then +-1.5 scale, and a
// third, asymmetric point at 0.75 scale when the sign of the mean is unknown.
std::vector<double> first_cumulant_abscissae(double scale, bool sign_known);
// Two points on the covariance tomogram at distinct distances from its mean.
std::vector<double> covariance_abscissae(double line_mean, double scale);

enum class Sign { Negative = -1, Positive = 1 };

struct RecoveryOptions {
    std::size_t grid_points{64};
    double spread_min{1e-6};
    double spread_max{1e3};
    double root_rel_tol{1e-10};
    // Relative tolerance for two roots to count as the common solution with
    // exact data; with noisy data it widens to 3 propagated standard deviations.
    double common_root_rel_tol{1e-6};
};

struct MeanVarianceResult {
    double mean{0.0};
    double variance{0.0};
    int used_points{0};
    Sign branch{Sign::Positive};
    double root_mismatch{0.0};
    double tolerance{0.0};
    std::vector<double> candidate_roots;
};

// Inverts a Gaussian tomogram from the point at x = 0 and two (sign known) or
// three (sign unknown) further points: the mean is eliminated through the
// x = 0 value, the remaining transcendental equation in the standard
// deviation is solved per point, and the root shared by all points is kept.
// Throws NoCommonRoot or InvalidDensity.
MeanVarianceResult recover_mean_and_variance(std::span<const TomogramPoint> points,
                                             std::optional<Sign> sign_known = std::nullopt,
                                             const RecoveryOptions& options = {});

struct CovarianceResult {
    double covariance{0.0};
    double spread{0.0};
    int used_points{2};
    bool robertson_breach{false};
    double root_mismatch{0.0};
};

// Spread along the line from two points with known mean, then
// sigma = (spread - mu^2 Dq^2 - nu^2 Dp^2) / (2 mu nu); for the diagonal line
// this is spread - (Dq^2 + Dp^2)/2. A Robertson-Schrodinger violation is
// flagged on the result rather than thrown.
CovarianceResult recover_covariance(std::span<const TomogramPoint> points, double mean_q, double mean_p,
                                    double var_q, double var_p, const HamiltonianParams& h,
                                    const RecoveryOptions& options = {});

struct CumulantReconstruction {
    CumulantState state;
    PointBudget budget;
    MeanVarianceResult q;
    MeanVarianceResult p;
    CovarianceResult covariance;
};

// Full five-cumulant recovery from the (1,0), (0,1) and diagonal tomograms
// taken at `time`. Budget: 8 points with both signs known, 10 without.
CumulantReconstruction reconstruct_cumulants(std::span<const TomogramPoint> q_points,
                                             std::span<const TomogramPoint> p_points,
                                             std::span<const TomogramPoint> diagonal_points,
                                             const HamiltonianParams& h,
                                             std::optional<std::pair<Sign, Sign>> signs = std::nullopt,
                                             double time = 0.0, const RecoveryOptions& options = {});

} // namespace gsptomo::tomography
