#pragma once

#include "rsode/density_estimator.hpp"
#include "rsode/series.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rsode {

// Distances on a shared grid by the composite trapezoid rule. The span
// versions perform no coverage check.
[[nodiscard]] double trapezoid(std::span<const double> grid, std::span<const double> f);
[[nodiscard]] double lp_distance(std::span<const double> grid, std::span<const double> f, std::span<const double> g,
                                 double p);
[[nodiscard]] double tv_distance(std::span<const double> grid, std::span<const double> f, std::span<const double> g);
[[nodiscard]] double hellinger_distance(std::span<const double> grid, std::span<const double> f,
                                        std::span<const double> g);

/// Throws GridCoverageError when the grid integral of `f` misses 1 by more than `tail_tol`.
void check_coverage(const DensityEstimate& f, double tail_tol);

inline constexpr double kDefaultTailTol = 1e-2;

/// Lp distance of two estimates on the same grid after coverage checks.
[[nodiscard]] double lp_distance(const DensityEstimate& f, const DensityEstimate& g, double p,
                                 double tail_tol = kDefaultTailTol);
[[nodiscard]] double tv_distance(const DensityEstimate& f, const DensityEstimate& g,
                                 double tail_tol = kDefaultTailTol);
[[nodiscard]] double hellinger_distance(const DensityEstimate& f, const DensityEstimate& g,
                                        double tail_tol = kDefaultTailTol);

/// Least-squares line y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t n_points = 0;
};
/// Throws InsufficientDataError with fewer than `min_points` points.
[[nodiscard]] LineFit fit_line(std::span<const double> x, std::span<const double> y, std::size_t min_points = 2);
/// Fit of log y against log x over the pairs with both values positive.
[[nodiscard]] LineFit fit_loglog(std::span<const double> x, std::span<const double> y, std::size_t min_points = 2);

/// Orders to estimate at one time, all on one grid.
struct ConvergenceCase {
    double t = 0.0;
    std::vector<int> orders;
    /// Empty: derived from pilot samples of every order involved.
    std::vector<double> grid;

    friend bool operator==(const ConvergenceCase&, const ConvergenceCase&) = default;
};

struct ConvergenceOptions {
    /// Reference order; 0 disables reference errors.
    int L = 30;
    std::size_t grid_points = 1000;
    double tail_tol = kDefaultTailTol;
};

struct ConvergenceCell {
    double t = 0.0;
    int N = 0;
    DensityEstimate estimate;
};

struct DifferenceRow {
    double t = 0.0;
    int N = 0;
    double value = 0.0;
};

struct PointwiseRow {
    double t = 0.0;
    int N = 0;
    double x = 0.0;
    double value = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceCase> cases;
    int L = 30;
    std::size_t M = 0;
    /// Estimates per case; the reference (order L) is stored separately.
    std::vector<std::vector<ConvergenceCell>> cells;
    std::vector<std::optional<DensityEstimate>> references;

    // Derived tables.
    std::vector<DifferenceRow> delta_eps;  // ||f^{N+1} - f^N||_1
    std::vector<DifferenceRow> reference_error;  // ||f^L - f^N||_1
    std::vector<PointwiseRow> pointwise;  // |f^{N+1} - f^N|(x)
};

/// Runs all estimates of the study (same seed policy for every cell) and
/// fills the derived tables.
[[nodiscard]] ConvergenceStudy run_convergence(const ProblemSpec& spec, const EstimatorConfig& cfg,
                                               std::vector<ConvergenceCase> cases,
                                               const ConvergenceOptions& options = {});

/// Recomputes the derived tables of `study` from its estimates.
void consecutive_differences(ConvergenceStudy& study, double tail_tol = kDefaultTailTol);

/// alpha, beta of log E = log beta + alpha log(delta eps) for one time.
struct RegressionResult {
    double t = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t n_points = 0;
};

/// Pairs (delta_eps[k], E[k]) with both positive; points whose E is within
/// twice the minimum E are dropped as saturated. Needs 3 usable points.
[[nodiscard]] RegressionResult regress_error_vs_difference(std::span<const double> delta_eps,
                                                           std::span<const double> E);
/// One regression per case of the study (pairs matched by N).
[[nodiscard]] std::vector<RegressionResult> regress_error_vs_difference(const ConvergenceStudy& study);

inline const std::vector<std::size_t> kDefaultPrefixes{100, 200, 400, 800, 1600, 3200, 6400, 12800};

struct SamplingRow {
    double t = 0.0;
    std::size_t P = 0;
    double mce = 0.0;
};

struct SlopeRow {
    double t = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t n_points = 0;
};

struct SamplingStudy {
    int N = 0;
    std::size_t M = 0;
    std::vector<std::size_t> prefixes;
    std::vector<SamplingRow> rows;
    std::vector<SlopeRow> slopes;  // NaN slope when fewer than two positive MCE values
};

/// MCE^P(t) = ||f^{N,P} - f^{N,M}||_1 with nested prefixes of one run.
[[nodiscard]] SamplingStudy sampling_error_study(const ProblemSpec& spec, const EstimatorConfig& cfg,
                                                 std::span<const double> times,
                                                 std::span<const std::size_t> prefixes = kDefaultPrefixes,
                                                 std::size_t grid_points = 1000,
                                                 double tail_tol = kDefaultTailTol);

/// Grid covering the pilot quantile ranges of all listed orders at t.
[[nodiscard]] std::vector<double> shared_grid(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                              std::span<const int> orders, std::size_t points = 1000);

}  // namespace rsode
