#pragma once

#include "rsode/expression.hpp"
#include "rsode/rng.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsode {

enum class Family { Uniform, Normal, Gamma, Beta, Exponential, Bernoulli, Poisson, PointMass, Custom };

[[nodiscard]] std::string_view family_name(Family f) noexcept;
/// Throws SpecError for unknown names.
[[nodiscard]] Family family_from_name(std::string_view name);

struct Interval {
    double lo;
    double hi;

    [[nodiscard]] bool contains(double y) const noexcept { return lo <= y && y <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Univariate law with optional truncation to a closed interval.
///
/// Immutable once built; copies share the precomputed tables, so instances
/// can be passed across threads freely. Parameters follow the usual
/// conventions: Gamma(shape, rate), Exponential(rate), Normal(mu, sigma).
class Distribution {
public:
    static Distribution uniform(double a, double b);
    static Distribution normal(double mu, double sigma);
    static Distribution gamma(double shape, double rate);
    static Distribution beta(double alpha, double beta);
    static Distribution exponential(double rate);
    static Distribution bernoulli(double p);
    static Distribution poisson(double lambda);
    static Distribution point_mass(double c);
    /// Density given as an expression in `y`, renormalized over `support`.
    static Distribution custom(const std::string& density, std::optional<Interval> support = std::nullopt);

    /// Generic factory used by the config reader; validates parameter count and domains.
    static Distribution make(Family family, std::vector<double> params,
                             std::optional<Interval> truncation = std::nullopt,
                             const std::string& custom_density = {},
                             std::optional<Interval> custom_support = std::nullopt);

    /// Restriction of this law to [lo, hi], renormalized by the contained probability.
    [[nodiscard]] Distribution truncated(double lo, double hi) const;

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] const std::vector<double>& params() const noexcept { return params_; }
    [[nodiscard]] const std::optional<Interval>& truncation() const noexcept { return truncation_; }
    [[nodiscard]] const std::string& custom_source() const noexcept;
    [[nodiscard]] std::optional<Interval> custom_support() const noexcept;

    [[nodiscard]] bool is_continuous() const noexcept;
    [[nodiscard]] bool is_discrete() const noexcept { return !is_continuous(); }
    [[nodiscard]] bool is_point_mass() const noexcept { return family_ == Family::PointMass; }

    /// Smallest closed interval holding all the probability (bounds may be infinite).
    [[nodiscard]] Interval support() const noexcept;
    /// Essential supremum of |Z|; infinite for unbounded laws.
    [[nodiscard]] double sup_norm() const noexcept;
    /// sqrt(E[Z^2]).
    [[nodiscard]] double l2_norm() const;
    /// Base-law probability of the truncation interval (1 when untruncated).
    [[nodiscard]] double contained_probability() const noexcept { return contained_; }

    [[nodiscard]] double sample(RngStream& rng) const;

    /// Probability density; throws UnsupportedError for discrete laws.
    [[nodiscard]] double density(double y) const;
    /// Probability mass at y; throws UnsupportedError for continuous laws.
    [[nodiscard]] double mass(double y) const;
    /// Support points with their probabilities for discrete laws; unbounded
    /// supports are cut once the remaining mass is below `tail`.
    [[nodiscard]] std::vector<std::pair<double, double>> atoms(double tail = 1e-16) const;

    /// E[Z^k]; closed form where available, adaptive quadrature otherwise.
    [[nodiscard]] double raw_moment(int k) const;
    [[nodiscard]] double mean() const { return raw_moment(1); }
    [[nodiscard]] double variance() const;

    friend bool operator==(const Distribution& a, const Distribution& b);

private:
    struct CustomLaw;

    Distribution(Family family, std::vector<double> params);
    void validate() const;
    void precompute();

    [[nodiscard]] double base_density(double y) const;
    [[nodiscard]] double base_cdf(double y) const;
    [[nodiscard]] double base_quantile(double u) const;
    [[nodiscard]] double base_mass(double k) const;
    [[nodiscard]] double base_moment(int k) const;
    [[nodiscard]] double sample_base(RngStream& rng) const;
    [[nodiscard]] double sample_standard_normal(RngStream& rng) const;
    [[nodiscard]] double sample_standard_gamma(double shape, RngStream& rng) const;
    [[nodiscard]] double sample_poisson(RngStream& rng) const;

    Family family_;
    std::vector<double> params_;
    std::optional<Interval> truncation_;
    double contained_ = 1.0;
    double cdf_lo_ = 0.0;
    double cdf_hi_ = 1.0;
    double log_norm_ = 0.0;
    std::shared_ptr<const CustomLaw> custom_;
};

}  // namespace rsode
