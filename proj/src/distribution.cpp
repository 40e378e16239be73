#include "rsode/distribution.hpp"

#include "rsode/error.hpp"
#include "rsode/quadrature.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace rsode {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kCustomKnots = 100001;
constexpr double kCustomTailMass = 1e-9;
constexpr double kMomentRelTol = 1e-10;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double poisson_log_pmf(double k, double lambda) {
    return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

// Exact integer Stirling numbers of the second kind would overflow quickly;
// doubles are exact up to 2^53 and good to rounding after that.
double touchard(int k, double lambda) {
    std::vector<double> row{1.0};  // S(0, 0)
    for (int n = 1; n <= k; ++n) {
        std::vector<double> next(static_cast<std::size_t>(n) + 1, 0.0);
        for (int j = 1; j <= n; ++j) {
            const double stay = j < n ? static_cast<double>(j) * row[static_cast<std::size_t>(j)] : 0.0;
            next[static_cast<std::size_t>(j)] = stay + row[static_cast<std::size_t>(j) - 1];
        }
        row = std::move(next);
    }
    double sum = 0.0;
    double power = 1.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        sum += row[j] * power;
        power *= lambda;
    }
    return sum;
}

}  // namespace

struct Distribution::CustomLaw {
    Expression expr;
    std::optional<Interval> declared_support;
    Interval effective;
    double normalizer = 1.0;  // integral of expr over `effective`
    std::vector<double> knots;
    std::vector<double> cdf;
};

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::Uniform: return "uniform";
        case Family::Normal: return "normal";
        case Family::Gamma: return "gamma";
        case Family::Beta: return "beta";
        case Family::Exponential: return "exponential";
        case Family::Bernoulli: return "bernoulli";
        case Family::Poisson: return "poisson";
        case Family::PointMass: return "point_mass";
        case Family::Custom: return "custom";
    }
    return "unknown";
}

Family family_from_name(std::string_view name) {
    static constexpr Family all[] = {Family::Uniform,     Family::Normal,    Family::Gamma,
                                     Family::Beta,        Family::Exponential, Family::Bernoulli,
                                     Family::Poisson,     Family::PointMass, Family::Custom};
    for (Family f : all)
        if (family_name(f) == name) return f;
    throw SpecError("unknown distribution family '" + std::string(name) + "'");
}

Distribution::Distribution(Family family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {}

Distribution Distribution::uniform(double a, double b) { return make(Family::Uniform, {a, b}); }
Distribution Distribution::normal(double mu, double sigma) { return make(Family::Normal, {mu, sigma}); }
Distribution Distribution::gamma(double shape, double rate) { return make(Family::Gamma, {shape, rate}); }
Distribution Distribution::beta(double alpha, double beta) { return make(Family::Beta, {alpha, beta}); }
Distribution Distribution::exponential(double rate) { return make(Family::Exponential, {rate}); }
Distribution Distribution::bernoulli(double p) { return make(Family::Bernoulli, {p}); }
Distribution Distribution::poisson(double lambda) { return make(Family::Poisson, {lambda}); }
Distribution Distribution::point_mass(double c) { return make(Family::PointMass, {c}); }

Distribution Distribution::custom(const std::string& density, std::optional<Interval> support) {
    return make(Family::Custom, {}, std::nullopt, density, support);
}

Distribution Distribution::make(Family family, std::vector<double> params, std::optional<Interval> truncation,
                                const std::string& custom_density, std::optional<Interval> custom_support) {
    Distribution d(family, std::move(params));
    d.truncation_ = truncation;
    if (family == Family::Custom) {
        if (custom_density.empty()) throw SpecError("custom distribution requires a density expression");
        auto law = std::make_shared<CustomLaw>(CustomLaw{Expression(custom_density, "y"), custom_support, {}, 1.0, {}, {}});
        d.custom_ = std::move(law);
    } else if (!custom_density.empty() || custom_support) {
        throw SpecError("density expression and support are only valid for the custom family");
    }
    d.validate();
    d.precompute();
    return d;
}

Distribution Distribution::truncated(double lo, double hi) const {
    if (family_ == Family::Custom)
        return make(family_, params_, Interval{lo, hi}, custom_->expr.source(), custom_->declared_support);
    return make(family_, params_, Interval{lo, hi});
}

const std::string& Distribution::custom_source() const noexcept {
    static const std::string empty;
    return custom_ ? custom_->expr.source() : empty;
}

std::optional<Interval> Distribution::custom_support() const noexcept {
    return custom_ ? custom_->declared_support : std::nullopt;
}

void Distribution::validate() const {
    const auto need = [&](std::size_t n) {
        if (params_.size() != n)
            throw SpecError(std::string(family_name(family_)) + " expects " + std::to_string(n) +
                            " parameter(s), got " + std::to_string(params_.size()));
        for (double p : params_)
            if (!std::isfinite(p)) throw SpecError(std::string(family_name(family_)) + " parameters must be finite");
    };
    const auto positive = [&](double v, const char* what) {
        if (!(v > 0.0)) throw SpecError(std::string(family_name(family_)) + ": " + what + " must be > 0, got " + fmt(v));
    };
    switch (family_) {
        case Family::Uniform:
            need(2);
            if (!(params_[0] < params_[1])) throw SpecError("uniform: requires a < b");
            break;
        case Family::Normal:
            need(2);
            positive(params_[1], "sigma");
            break;
        case Family::Gamma:
            need(2);
            positive(params_[0], "shape");
            positive(params_[1], "rate");
            break;
        case Family::Beta:
            need(2);
            positive(params_[0], "alpha");
            positive(params_[1], "beta");
            break;
        case Family::Exponential:
            need(1);
            positive(params_[0], "rate");
            break;
        case Family::Bernoulli:
            need(1);
            if (!(params_[0] >= 0.0 && params_[0] <= 1.0)) throw SpecError("bernoulli: requires 0 <= p <= 1");
            break;
        case Family::Poisson:
            need(1);
            positive(params_[0], "lambda");
            break;
        case Family::PointMass:
            need(1);
            break;
        case Family::Custom:
            need(0);
            if (custom_->declared_support && !(custom_->declared_support->lo < custom_->declared_support->hi))
                throw SpecError("custom: support requires lo < hi");
            break;
    }
    if (truncation_) {
        if (std::isnan(truncation_->lo) || std::isnan(truncation_->hi) || !(truncation_->lo < truncation_->hi))
            throw SpecError(std::string(family_name(family_)) + ": truncation requires lo < hi");
    }
}

void Distribution::precompute() {
    switch (family_) {
        case Family::Normal:
            log_norm_ = -std::log(params_[1] * std::sqrt(2.0 * std::numbers::pi));
            break;
        case Family::Gamma:
            log_norm_ = params_[0] * std::log(params_[1]) - std::lgamma(params_[0]);
            break;
        case Family::Beta:
            log_norm_ = std::lgamma(params_[0] + params_[1]) - std::lgamma(params_[0]) - std::lgamma(params_[1]);
            break;
        default:
            break;
    }

    if (family_ == Family::Custom) {
        auto law = std::make_shared<CustomLaw>(*custom_);
        const Interval declared = law->declared_support.value_or(Interval{-kInf, kInf});
        Interval eff = declared;
        if (truncation_) eff = Interval{std::max(eff.lo, truncation_->lo), std::min(eff.hi, truncation_->hi)};
        if (!(eff.lo < eff.hi)) throw SpecError("custom: truncation does not intersect the support");
        const auto f = [&](double y) { return law->expr(y); };
        const double base_norm = integrate(f, declared.lo, declared.hi);
        if (!std::isfinite(base_norm) || !(base_norm > 0.0))
            throw SpecError("custom density '" + law->expr.source() + "' does not integrate to a positive finite value");
        law->normalizer = eff == declared ? base_norm : integrate(f, eff.lo, eff.hi);
        law->effective = eff;
        contained_ = law->normalizer / base_norm;
        if (!(contained_ > 1e-14)) throw SpecError("custom: truncation interval holds no probability");

        // Sampling table over a finite range holding all but kCustomTailMass of the law.
        const double target = kCustomTailMass * law->normalizer;
        double a = eff.lo;
        double b = eff.hi;
        const double centre = std::isfinite(a) ? (std::isfinite(b) ? 0.5 * (a + b) : a + 1.0)
                                               : (std::isfinite(b) ? b - 1.0 : 0.0);
        for (double step = 1.0; !std::isfinite(a); step *= 2.0) {
            if (step > 1e12) throw SpecError("custom: cannot bracket the lower tail for sampling");
            if (integrate(f, -kInf, centre - step) < target) a = centre - step;
        }
        for (double step = 1.0; !std::isfinite(b); step *= 2.0) {
            if (step > 1e12) throw SpecError("custom: cannot bracket the upper tail for sampling");
            if (integrate(f, centre + step, kInf) < target) b = centre + step;
        }
        law->knots.resize(kCustomKnots);
        law->cdf.resize(kCustomKnots);
        const double h = (b - a) / static_cast<double>(kCustomKnots - 1);
        double prev = 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < kCustomKnots; ++i) {
            const double y = a + h * static_cast<double>(i);
            const double v = law->expr(y);
            if (!std::isfinite(v) || v < 0.0)
                throw SpecError("custom density '" + law->expr.source() + "' is negative or not finite at y=" + fmt(y));
            if (i > 0) acc += 0.5 * (prev + v) * h;
            law->knots[i] = y;
            law->cdf[i] = acc;
            prev = v;
        }
        if (!(acc > 0.0)) throw SpecError("custom density has no mass on its sampling range");
        for (double& c : law->cdf) c /= acc;
        custom_ = std::move(law);
        return;
    }

    if (!truncation_) return;
    const Interval t = *truncation_;
    switch (family_) {
        case Family::PointMass:
            if (!t.contains(params_[0])) throw SpecError("point_mass: truncation interval excludes the atom");
            contained_ = 1.0;
            break;
        case Family::Bernoulli:
        case Family::Poisson: {
            contained_ = 0.0;
            const double first = std::max(0.0, std::ceil(t.lo));
            const double last = family_ == Family::Bernoulli ? std::min(1.0, std::floor(t.hi)) : std::floor(t.hi);
            if (family_ == Family::Poisson && std::isinf(last)) {
                contained_ = first <= 0.0 ? 1.0 : boost::math::gamma_p(first, params_[0]);
            } else {
                for (double k = first; k <= last; k += 1.0) contained_ += base_mass(k);
            }
            break;
        }
        default:
            cdf_lo_ = base_cdf(t.lo);
            cdf_hi_ = base_cdf(t.hi);
            contained_ = cdf_hi_ - cdf_lo_;
            break;
    }
    if (!(contained_ > 1e-14))
        throw SpecError(std::string(family_name(family_)) + ": truncation interval holds no probability");
}

bool Distribution::is_continuous() const noexcept {
    switch (family_) {
        case Family::Bernoulli:
        case Family::Poisson:
        case Family::PointMass:
            return false;
        default:
            return true;
    }
}

Interval Distribution::support() const noexcept {
    Interval s{-kInf, kInf};
    switch (family_) {
        case Family::Uniform: s = {params_[0], params_[1]}; break;
        case Family::Normal: break;
        case Family::Gamma:
        case Family::Exponential:
        case Family::Poisson: s = {0.0, kInf}; break;
        case Family::Beta: s = {0.0, 1.0}; break;
        case Family::Bernoulli:
            s = {params_[0] == 1.0 ? 1.0 : 0.0, params_[0] == 0.0 ? 0.0 : 1.0};
            break;
        case Family::PointMass: s = {params_[0], params_[0]}; break;
        case Family::Custom: return custom_->effective;
    }
    if (truncation_) s = {std::max(s.lo, truncation_->lo), std::min(s.hi, truncation_->hi)};
    return s;
}

double Distribution::sup_norm() const noexcept {
    const Interval s = support();
    return std::max(std::abs(s.lo), std::abs(s.hi));
}

double Distribution::l2_norm() const { return std::sqrt(raw_moment(2)); }

double Distribution::variance() const {
    const double m = raw_moment(1);
    return std::max(0.0, raw_moment(2) - m * m);
}

double Distribution::base_density(double y) const {
    switch (family_) {
        case Family::Uniform:
            return (y >= params_[0] && y <= params_[1]) ? 1.0 / (params_[1] - params_[0]) : 0.0;
        case Family::Normal: {
            const double z = (y - params_[0]) / params_[1];
            return std::exp(log_norm_ - 0.5 * z * z);
        }
        case Family::Gamma:
            if (y < 0.0) return 0.0;
            if (y == 0.0) return params_[0] < 1.0 ? kInf : (params_[0] == 1.0 ? params_[1] : 0.0);
            return std::exp(log_norm_ + (params_[0] - 1.0) * std::log(y) - params_[1] * y);
        case Family::Beta:
            if (y < 0.0 || y > 1.0) return 0.0;
            return std::exp(log_norm_ + (params_[0] - 1.0) * std::log(y) + (params_[1] - 1.0) * std::log1p(-y));
        case Family::Exponential:
            return y < 0.0 ? 0.0 : params_[0] * std::exp(-params_[0] * y);
        case Family::Custom:
            return custom_->effective.contains(y) ? custom_->expr(y) / custom_->normalizer : 0.0;
        default:
            throw UnsupportedError(std::string(family_name(family_)) + " law has no density");
    }
}

double Distribution::base_cdf(double y) const {
    switch (family_) {
        case Family::Uniform:
            return std::clamp((y - params_[0]) / (params_[1] - params_[0]), 0.0, 1.0);
        case Family::Normal:
            if (std::isinf(y)) return y > 0 ? 1.0 : 0.0;
            return boost::math::cdf(boost::math::normal_distribution<double>(params_[0], params_[1]), y);
        case Family::Gamma:
            if (y <= 0.0) return 0.0;
            if (std::isinf(y)) return 1.0;
            return boost::math::gamma_p(params_[0], params_[1] * y);
        case Family::Beta:
            if (y <= 0.0) return 0.0;
            if (y >= 1.0) return 1.0;
            return boost::math::ibeta(params_[0], params_[1], y);
        case Family::Exponential:
            if (y <= 0.0) return 0.0;
            return -std::expm1(-params_[0] * y);
        default:
            throw UnsupportedError(std::string(family_name(family_)) + " law has no closed-form cdf");
    }
}

double Distribution::base_quantile(double u) const {
    switch (family_) {
        case Family::Uniform:
            return params_[0] + u * (params_[1] - params_[0]);
        case Family::Normal:
            return boost::math::quantile(boost::math::normal_distribution<double>(params_[0], params_[1]), u);
        case Family::Gamma:
            return boost::math::gamma_p_inv(params_[0], u) / params_[1];
        case Family::Beta:
            return boost::math::ibeta_inv(params_[0], params_[1], u);
        case Family::Exponential:
            return -std::log1p(-u) / params_[0];
        default:
            throw UnsupportedError(std::string(family_name(family_)) + " law has no closed-form quantile");
    }
}

double Distribution::base_mass(double k) const {
    switch (family_) {
        case Family::Bernoulli:
            if (k == 0.0) return 1.0 - params_[0];
            if (k == 1.0) return params_[0];
            return 0.0;
        case Family::Poisson:
            if (k < 0.0 || k != std::floor(k)) return 0.0;
            return std::exp(poisson_log_pmf(k, params_[0]));
        case Family::PointMass:
            return k == params_[0] ? 1.0 : 0.0;
        default:
            throw UnsupportedError(std::string(family_name(family_)) + " law has no probability mass function");
    }
}

double Distribution::density(double y) const {
    if (!is_continuous()) throw UnsupportedError(std::string(family_name(family_)) + " law has no density");
    if (family_ == Family::Custom) return base_density(y);
    if (truncation_) {
        if (!truncation_->contains(y)) return 0.0;
        return base_density(y) / contained_;
    }
    return base_density(y);
}

double Distribution::mass(double y) const {
    if (is_continuous())
        throw UnsupportedError(std::string(family_name(family_)) + " law is continuous; use density()");
    if (truncation_ && !truncation_->contains(y)) return 0.0;
    return base_mass(y) / contained_;
}

std::vector<std::pair<double, double>> Distribution::atoms(double tail) const {
    if (is_continuous())
        throw UnsupportedError(std::string(family_name(family_)) + " law is continuous; it has no atoms");
    std::vector<std::pair<double, double>> out;
    const Interval s = support();
    if (family_ == Family::PointMass) {
        out.emplace_back(params_[0], 1.0);
        return out;
    }
    double remaining = 1.0;
    for (double k = std::max(0.0, std::ceil(s.lo)); k <= s.hi; k += 1.0) {
        const double p = mass(k);
        if (p > 0.0) out.emplace_back(k, p);
        remaining -= p;
        if (family_ == Family::Poisson && k > params_[0] && remaining < tail) break;
    }
    return out;
}

double Distribution::base_moment(int k) const {
    const double p0 = params_.empty() ? 0.0 : params_[0];
    const double p1 = params_.size() > 1 ? params_[1] : 0.0;
    switch (family_) {
        case Family::Uniform:
            return (std::pow(p1, k + 1) - std::pow(p0, k + 1)) / (static_cast<double>(k + 1) * (p1 - p0));
        case Family::Normal: {
            double prev2 = 1.0;  // E[Z^0]
            double prev1 = p0;   // E[Z^1]
            if (k == 1) return prev1;
            for (int j = 2; j <= k; ++j) {
                const double cur = p0 * prev1 + static_cast<double>(j - 1) * p1 * p1 * prev2;
                prev2 = prev1;
                prev1 = cur;
            }
            return prev1;
        }
        case Family::Gamma: {
            double m = 1.0;
            for (int j = 0; j < k; ++j) m *= (p0 + j) / p1;
            return m;
        }
        case Family::Beta: {
            double m = 1.0;
            for (int j = 0; j < k; ++j) m *= (p0 + j) / (p0 + p1 + j);
            return m;
        }
        case Family::Exponential: {
            double m = 1.0;
            for (int j = 1; j <= k; ++j) m *= static_cast<double>(j) / p0;
            return m;
        }
        case Family::Bernoulli:
            return p0;
        case Family::Poisson:
            return touchard(k, p0);
        case Family::PointMass:
            return std::pow(p0, k);
        case Family::Custom:
            break;
    }
    return 0.0;
}

double Distribution::raw_moment(int k) const {
    if (k < 0) throw SpecError("raw_moment: order must be >= 0, got " + std::to_string(k));
    if (k == 0) return 1.0;
    double result = 0.0;
    if (family_ == Family::Custom || (truncation_ && is_continuous())) {
        const Interval s = support();
        result = integrate([&](double y) { return std::pow(y, k) * density(y); }, s.lo, s.hi, kMomentRelTol);
    } else if (truncation_ && family_ != Family::PointMass) {
        for (const auto& [y, p] : atoms()) result += std::pow(y, k) * p;
    } else {
        result = base_moment(k);
    }
    if (!std::isfinite(result))
        throw NumericalError(std::string(family_name(family_)) + ": moment of order " + std::to_string(k) +
                             " is not finite");
    return result;
}

double Distribution::sample_standard_normal(RngStream& rng) const {
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * rng.uniform() - 1.0;
        v = 2.0 * rng.uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
}

// Marsaglia & Tsang; shape < 1 boosted through Gamma(shape + 1) * U^(1/shape).
double Distribution::sample_standard_gamma(double shape, RngStream& rng) const {
    if (shape < 1.0) {
        const double g = sample_standard_gamma(shape + 1.0, rng);
        return g * std::pow(rng.uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = sample_standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Distribution::sample_poisson(RngStream& rng) const {
    const double lambda = params_[0];
    if (lambda < 30.0) {
        double p = std::exp(-lambda);
        double cdf = p;
        const double u = rng.uniform();
        double k = 0.0;
        while (u > cdf && p > 0.0) {
            k += 1.0;
            p *= lambda / k;
            cdf += p;
        }
        return k;
    }
    // Hörmann's transformed rejection (PTRS).
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return k;
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -lambda + k * loglam - std::lgamma(k + 1.0))
            return k;
    }
}

double Distribution::sample_base(RngStream& rng) const {
    switch (family_) {
        case Family::Uniform: return params_[0] + (params_[1] - params_[0]) * rng.uniform();
        case Family::Normal: return params_[0] + params_[1] * sample_standard_normal(rng);
        case Family::Gamma: return sample_standard_gamma(params_[0], rng) / params_[1];
        case Family::Beta: {
            const double x = sample_standard_gamma(params_[0], rng);
            const double y = sample_standard_gamma(params_[1], rng);
            return x / (x + y);
        }
        case Family::Exponential: return -std::log(rng.uniform()) / params_[0];
        case Family::Bernoulli: return rng.uniform() < params_[0] ? 1.0 : 0.0;
        case Family::Poisson: return sample_poisson(rng);
        case Family::PointMass: return params_[0];
        case Family::Custom: {
            const auto& cdf = custom_->cdf;
            const auto& knots = custom_->knots;
            const double u = rng.uniform();
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
            const std::size_t lo = hi - 1;
            const double span = cdf[hi] - cdf[lo];
            const double w = span > 0.0 ? (u - cdf[lo]) / span : 0.5;
            return knots[lo] + w * (knots[hi] - knots[lo]);
        }
    }
    return 0.0;
}

double Distribution::sample(RngStream& rng) const {
    if (!truncation_ || family_ == Family::Custom || family_ == Family::PointMass) return sample_base(rng);
    if (is_continuous()) {
        const double u = cdf_lo_ + rng.uniform() * (cdf_hi_ - cdf_lo_);
        return std::clamp(base_quantile(u), truncation_->lo, truncation_->hi);
    }
    for (int attempt = 0; attempt < 10'000'000; ++attempt) {
        const double y = sample_base(rng);
        if (truncation_->contains(y)) return y;
    }
    throw NumericalError(std::string(family_name(family_)) + ": rejection sampling of the truncated law failed");
}

bool operator==(const Distribution& a, const Distribution& b) {
    if (a.family_ != b.family_ || a.params_ != b.params_ || a.truncation_ != b.truncation_) return false;
    if (a.family_ == Family::Custom)
        return a.custom_->expr == b.custom_->expr && a.custom_->declared_support == b.custom_->declared_support;
    return true;
}

}  // namespace rsode
