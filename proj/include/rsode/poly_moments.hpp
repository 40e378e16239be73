#pragma once

#include "rsode/distribution.hpp"
#include "rsode/rng.hpp"
#include "rsode/series.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rsode {

/// Which member of the fundamental pair serves as a control variate.
enum class Control { S0, S1 };

[[nodiscard]] const char* control_name(Control c) noexcept;
[[nodiscard]] Control control_from_name(std::string_view name);

/// Polynomial in a fixed number of variables with real coefficients.
///
/// Terms are keyed by dense exponent vectors and kept in lexicographic order;
/// zero coefficients are never stored.
class SparsePolynomial {
public:
    using Exponents = std::vector<std::uint16_t>;
    using Terms = std::map<Exponents, double>;

    explicit SparsePolynomial(std::size_t nvars = 0) : nvars_(nvars) {}

    static SparsePolynomial constant(std::size_t nvars, double c);
    static SparsePolynomial variable(std::size_t nvars, std::size_t id);

    [[nodiscard]] std::size_t nvars() const noexcept { return nvars_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] const Terms& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] double constant_term() const;

    /// Adds c * x^e; throws SpecError when `e` has the wrong length.
    void add_term(const Exponents& e, double c);

    SparsePolynomial& operator+=(const SparsePolynomial& o);
    SparsePolynomial& operator-=(const SparsePolynomial& o);
    SparsePolynomial& operator*=(double c);
    [[nodiscard]] SparsePolynomial times_variable(std::size_t id) const;

    friend SparsePolynomial operator+(SparsePolynomial a, const SparsePolynomial& b) { return a += b; }
    friend SparsePolynomial operator-(SparsePolynomial a, const SparsePolynomial& b) { return a -= b; }
    friend SparsePolynomial operator*(SparsePolynomial a, double c) { return a *= c; }
    friend SparsePolynomial operator*(double c, SparsePolynomial a) { return a *= c; }
    friend SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b);

    [[nodiscard]] double evaluate(std::span<const double> values) const;
    [[nodiscard]] std::uint16_t max_exponent(std::size_t id) const;

private:
    std::size_t nvars_;
    Terms terms_;
};

/// Independent random inputs the polynomial variables stand for.
struct RandomInputs {
    std::vector<Distribution> laws;
    std::vector<std::string> labels;
};

/// Lazily cached raw moments of each input.
class MomentTable {
public:
    explicit MomentTable(const RandomInputs& inputs) : inputs_(&inputs), cache_(inputs.laws.size()) {}
    [[nodiscard]] double get(std::size_t id, std::size_t k);

private:
    const RandomInputs* inputs_;
    std::vector<std::vector<double>> cache_;
};

/// E[P] by term-wise products of per-variable moments.
[[nodiscard]] double expectation(const SparsePolynomial& p, MomentTable& moments);

/// Coefficient polynomials of S0 or S1 up to index N0 over the random
/// coefficients A_n, B_n (n <= N0 - 2).
struct SymbolicSeries {
    RandomInputs inputs;
    std::vector<SparsePolynomial> coeffs;
};

inline constexpr std::size_t kDefaultTermBudget = 1'000'000;

/// Throws BudgetError when any intermediate polynomial exceeds `term_budget` terms.
[[nodiscard]] SymbolicSeries symbolic_series(const ProblemSpec& spec, int N0, Control which,
                                             std::size_t term_budget = kDefaultTermBudget);

/// Sum of coeffs[n] * (t - t0)^n as one polynomial.
[[nodiscard]] SparsePolynomial evaluate_at(const SymbolicSeries& s, double t, double t0);

/// Exact mean and variance of the truncated series at t. Negative variances
/// above -1e-12 (relative to the squared mean, at least 1) are clamped to 0;
/// larger ones raise NumericalError.
[[nodiscard]] std::pair<double, double> mean_and_variance(const SymbolicSeries& s, double t, double t0,
                                                          std::size_t term_budget = kDefaultTermBudget);

/// Mean and variance of a control variate, exact when the symbolic route fits
/// the budget and estimated from `fallback_samples` draws on `fallback_stream`
/// otherwise.
struct ControlMoments {
    double mean = 0.0;
    double variance = 0.0;
    bool exact = true;
    std::size_t terms = 0;
};

[[nodiscard]] ControlMoments control_moments(const ProblemSpec& spec, int N0, Control which, double t,
                                             const RngStream& fallback_stream,
                                             std::size_t term_budget = kDefaultTermBudget,
                                             std::size_t fallback_samples = 100'000);

}  // namespace rsode
