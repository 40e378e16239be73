#pragma once

#include "rsode/distribution.hpp"
#include "rsode/expression.hpp"
#include "rsode/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rsode {

/// Law of the coefficient sequence of A(t) or B(t) around t0.
///
/// `entries` fixes the leading coefficients (point masses for numbers). Past
/// them the coefficient is zero (Explicit), `rule(n)` (Rule) or an independent
/// draw from `family` (Iid). Indices above `degree_bound` are always zero.
struct CoefficientModel {
    enum class Kind { Explicit, Rule, Iid };

    Kind kind = Kind::Explicit;
    std::vector<Distribution> entries;
    std::optional<Expression> rule;
    std::optional<Distribution> family;
    std::optional<int> degree_bound;
    std::vector<double> sup_norm_bounds;

    static CoefficientModel zero() { return {}; }
    static CoefficientModel constants(const std::vector<double>& values);

    /// Throws SpecError when the model is inconsistent.
    void validate() const;

    /// Law of the n-th coefficient.
    [[nodiscard]] Distribution law(std::size_t n) const;
    [[nodiscard]] bool is_random(std::size_t n) const;
    /// Number of possibly nonzero leading coefficients, or nullopt for infinite expansions.
    [[nodiscard]] std::optional<std::size_t> extent() const;
    /// True when no coefficient is random.
    [[nodiscard]] bool deterministic() const;
    /// Labels of coefficient laws with unbounded support, e.g. "A_3".
    [[nodiscard]] std::vector<std::string> unbounded_laws(char symbol, std::size_t count) const;

    friend bool operator==(const CoefficientModel&, const CoefficientModel&) = default;
};

[[nodiscard]] const char* kind_name(CoefficientModel::Kind k) noexcept;
[[nodiscard]] CoefficientModel::Kind kind_from_name(std::string_view name);

/// X'' + A(t) X' + B(t) X = 0, X(t0) = Y0, X'(t0) = Y1.
struct ProblemSpec {
    double t0 = 0.0;
    CoefficientModel A;
    CoefficientModel B;
    Distribution Y0 = Distribution::point_mass(0.0);
    Distribution Y1 = Distribution::point_mass(0.0);
    std::optional<double> radius;

    void validate() const;
    [[nodiscard]] bool deterministic_coefficients() const { return A.deterministic() && B.deterministic(); }
    /// Human-readable warnings (unbounded coefficient laws) for orders up to N.
    [[nodiscard]] std::vector<std::string> warnings(int N) const;

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Coefficients of the fundamental pair S0 (X0=1, X1=0) and S1 (X0=0, X1=1).
struct SeriesPair {
    double t0 = 0.0;
    int order = 0;
    std::vector<double> s0;
    std::vector<double> s1;
};

/// X_0..X_N from the power-series recursion; `a`, `b` may be shorter than
/// N-1 (missing entries are zero). Summation runs over m ascending and skips
/// only indices past the last nonzero coefficient, so padding with zeros never
/// changes the result.
[[nodiscard]] std::vector<double> recur_coefficients(std::span<const double> a, std::span<const double> b,
                                                     double x0, double x1, int N);

/// Same as above, writing into `out` (resized to N+1); avoids allocation in hot loops.
void recur_coefficients_into(std::span<const double> a, std::span<const double> b, double x0, double x1, int N,
                             std::vector<double>& out);

/// Substream slots used inside one sample's stream. The non-role initial
/// condition takes slot 0; coefficient n of A and B take 1+2n and 2+2n.
inline constexpr std::uint64_t kInitialSlot = 0;
[[nodiscard]] constexpr std::uint64_t coefficient_slot(char symbol, std::size_t n) noexcept {
    return (symbol == 'A' ? 1u : 2u) + 2u * static_cast<std::uint64_t>(n);
}

/// Values of the coefficients 0..count-1 that can be nonzero, trailing zeros trimmed.
void sample_coefficients(const CoefficientModel& model, char symbol, std::size_t count, const RngStream& sample_stream,
                         std::vector<double>& out);

/// Draws A_0..A_{N-2}, B_0..B_{N-2} from `sample_stream` and builds the pair.
/// Each coefficient owns a substream, so the draws do not depend on N.
[[nodiscard]] SeriesPair realize_series_pair(const ProblemSpec& spec, int N, const RngStream& sample_stream);

/// Pair for deterministic coefficients (no randomness involved).
[[nodiscard]] SeriesPair deterministic_series_pair(const ProblemSpec& spec, int N);

/// Horner evaluation of one coefficient vector at t - t0.
[[nodiscard]] double horner(std::span<const double> c, double dt) noexcept;
/// (S0^N(t), S1^N(t)).
[[nodiscard]] std::pair<double, double> eval_series(const SeriesPair& p, double t) noexcept;

/// Smallest truncation order guaranteeing root-mean-square error below
/// `epsilon` at distance `rho` from t0, using the a priori bound built from
/// sup-norm bounds of the coefficients on a disc of radius `r`. `s` must lie in
/// (rho, r).
[[nodiscard]] int advise_truncation(std::span<const double> bounds_A, std::span<const double> bounds_B,
                                    double y0_norm, double y1_norm, double r, double rho, double s, double epsilon);

/// Default intermediate radius (rho + r) / 2.
[[nodiscard]] inline double default_advisor_s(double rho, double r) noexcept { return 0.5 * (rho + r); }

/// Sup-norm bounds for the advisor: the declared ones, else the support bounds
/// of a polynomial model. Throws SpecError when neither is available.
[[nodiscard]] std::vector<double> advisor_bounds(const CoefficientModel& model);

}  // namespace rsode
