#include "rsode/series.hpp"

#include "rsode/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsode {

namespace {

std::size_t trimmed_length(std::span<const double> v) {
    std::size_t n = v.size();
    while (n > 0 && v[n - 1] == 0.0) --n;
    return n;
}

// Pointer to the law of coefficient n, or nullptr when the value comes from
// the rule (written to `rule_value`) or is structurally zero.
const Distribution* law_or_value(const CoefficientModel& m, std::size_t n, double& value) {
    value = 0.0;
    if (m.degree_bound && n > static_cast<std::size_t>(*m.degree_bound)) return nullptr;
    if (n < m.entries.size()) return &m.entries[n];
    switch (m.kind) {
        case CoefficientModel::Kind::Explicit:
            return nullptr;
        case CoefficientModel::Kind::Rule:
            value = (*m.rule)(static_cast<double>(n));
            if (!std::isfinite(value))
                throw SpecError("coefficient rule '" + m.rule->source() + "' is not finite at n=" + std::to_string(n));
            return nullptr;
        case CoefficientModel::Kind::Iid:
            return &*m.family;
    }
    return nullptr;
}

}  // namespace

const char* kind_name(CoefficientModel::Kind k) noexcept {
    switch (k) {
        case CoefficientModel::Kind::Explicit: return "explicit";
        case CoefficientModel::Kind::Rule: return "rule";
        case CoefficientModel::Kind::Iid: return "iid";
    }
    return "unknown";
}

CoefficientModel::Kind kind_from_name(std::string_view name) {
    if (name == "explicit") return CoefficientModel::Kind::Explicit;
    if (name == "rule") return CoefficientModel::Kind::Rule;
    if (name == "iid") return CoefficientModel::Kind::Iid;
    throw SpecError("unknown coefficient kind '" + std::string(name) + "' (expected explicit, rule or iid)");
}

CoefficientModel CoefficientModel::constants(const std::vector<double>& values) {
    CoefficientModel m;
    for (double v : values) m.entries.push_back(Distribution::point_mass(v));
    return m;
}

void CoefficientModel::validate() const {
    switch (kind) {
        case Kind::Explicit:
            if (rule || family) throw SpecError("explicit coefficient model takes neither a rule nor a family");
            break;
        case Kind::Rule:
            if (!rule) throw SpecError("rule coefficient model requires a rule expression in n");
            if (family) throw SpecError("rule coefficient model takes no family");
            break;
        case Kind::Iid:
            if (!family) throw SpecError("iid coefficient model requires a family");
            if (rule) throw SpecError("iid coefficient model takes no rule");
            break;
    }
    if (degree_bound) {
        if (*degree_bound < 0) throw SpecError("degree_bound must be >= 0");
        if (entries.size() > static_cast<std::size_t>(*degree_bound) + 1)
            throw SpecError("coefficient entries extend beyond degree_bound");
    }
    for (std::size_t i = 0; i < sup_norm_bounds.size(); ++i) {
        const double bound = sup_norm_bounds[i];
        if (!(bound >= 0.0)) throw SpecError("sup_norm_bounds must be nonnegative");
        const double actual = law(i).sup_norm();
        if (actual > bound * (1.0 + 1e-12) + 1e-300)
            throw SpecError("sup_norm_bounds[" + std::to_string(i) + "] = " + std::to_string(bound) +
                            " does not dominate the coefficient law (sup norm " + std::to_string(actual) + ")");
    }
}

Distribution CoefficientModel::law(std::size_t n) const {
    double value = 0.0;
    const Distribution* d = law_or_value(*this, n, value);
    return d ? *d : Distribution::point_mass(value);
}

bool CoefficientModel::is_random(std::size_t n) const {
    double value = 0.0;
    const Distribution* d = law_or_value(*this, n, value);
    return d && !d->is_point_mass();
}

std::optional<std::size_t> CoefficientModel::extent() const {
    std::optional<std::size_t> e;
    if (kind == Kind::Explicit) e = entries.size();
    if (degree_bound) {
        const auto d = static_cast<std::size_t>(*degree_bound) + 1;
        e = e ? std::min(*e, d) : d;
    }
    return e;
}

bool CoefficientModel::deterministic() const {
    for (const auto& d : entries)
        if (!d.is_point_mass()) return false;
    if (kind == Kind::Iid && !family->is_point_mass()) {
        const auto e = extent();
        if (!e || *e > entries.size()) return false;
    }
    return true;
}

std::vector<std::string> CoefficientModel::unbounded_laws(char symbol, std::size_t count) const {
    std::vector<std::string> out;
    const std::size_t upto = std::min(count, extent().value_or(count));
    for (std::size_t n = 0; n < upto; ++n) {
        if (std::isinf(law(n).sup_norm())) out.push_back(std::string(1, symbol) + "_" + std::to_string(n));
    }
    return out;
}

void ProblemSpec::validate() const {
    if (!std::isfinite(t0)) throw SpecError("t0 must be finite");
    if (radius && !(*radius > 0.0)) throw SpecError("radius must be > 0");
    A.validate();
    B.validate();
}

std::vector<std::string> ProblemSpec::warnings(int N) const {
    std::vector<std::string> out;
    const auto count = static_cast<std::size_t>(std::max(N - 1, 0));
    for (const auto* m : {&A, &B}) {
        const char symbol = m == &A ? 'A' : 'B';
        for (const auto& label : m->unbounded_laws(symbol, count))
            out.push_back("coefficient " + label + " has an unbounded law; the mean-square series may not exist");
    }
    return out;
}

void recur_coefficients_into(std::span<const double> a, std::span<const double> b, double x0, double x1, int N,
                             std::vector<double>& out) {
    if (N < 1) throw SpecError("truncation order N must be >= 1, got " + std::to_string(N));
    const std::size_t la = trimmed_length(a);
    const std::size_t lb = trimmed_length(b);
    const std::size_t len = std::max(la, lb);
    out.assign(static_cast<std::size_t>(N) + 1, 0.0);
    double* x = out.data();
    x[0] = x0;
    x[1] = x1;
    for (std::size_t n = 0; n + 2 <= static_cast<std::size_t>(N); ++n) {
        const std::size_t lo = n + 1 > len ? n + 1 - len : 0;
        double sum = 0.0;
        for (std::size_t m = lo; m <= n; ++m) {
            const std::size_t k = n - m;
            if (k < la && k < lb) {
                sum += static_cast<double>(m + 1) * a[k] * x[m + 1] + b[k] * x[m];
            } else if (k < la) {
                sum += static_cast<double>(m + 1) * a[k] * x[m + 1];
            } else if (k < lb) {
                sum += b[k] * x[m];
            }
        }
        x[n + 2] = -sum / (static_cast<double>(n + 2) * static_cast<double>(n + 1));
    }
}

std::vector<double> recur_coefficients(std::span<const double> a, std::span<const double> b, double x0, double x1,
                                       int N) {
    std::vector<double> out;
    recur_coefficients_into(a, b, x0, x1, N, out);
    return out;
}

void sample_coefficients(const CoefficientModel& model, char symbol, std::size_t count, const RngStream& sample_stream,
                         std::vector<double>& out) {
    const std::size_t upto = std::min(count, model.extent().value_or(count));
    out.resize(upto);
    for (std::size_t n = 0; n < upto; ++n) {
        double value = 0.0;
        const Distribution* d = law_or_value(model, n, value);
        if (d) {
            if (d->is_point_mass()) {
                value = d->params()[0];
            } else {
                RngStream rng = sample_stream.substream(coefficient_slot(symbol, n));
                value = d->sample(rng);
            }
        }
        out[n] = value;
    }
    out.resize(trimmed_length(out));
}

SeriesPair realize_series_pair(const ProblemSpec& spec, int N, const RngStream& sample_stream) {
    if (N < 1) throw SpecError("truncation order N must be >= 1, got " + std::to_string(N));
    const auto count = static_cast<std::size_t>(N - 1);
    std::vector<double> a;
    std::vector<double> b;
    sample_coefficients(spec.A, 'A', count, sample_stream, a);
    sample_coefficients(spec.B, 'B', count, sample_stream, b);
    SeriesPair p;
    p.t0 = spec.t0;
    p.order = N;
    recur_coefficients_into(a, b, 1.0, 0.0, N, p.s0);
    recur_coefficients_into(a, b, 0.0, 1.0, N, p.s1);
    return p;
}

SeriesPair deterministic_series_pair(const ProblemSpec& spec, int N) {
    if (!spec.deterministic_coefficients())
        throw UnsupportedError("deterministic_series_pair: the coefficient models are random");
    return realize_series_pair(spec, N, RngStream(0, 0));
}

double horner(std::span<const double> c, double dt) noexcept {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * dt + c[i];
    return acc;
}

std::pair<double, double> eval_series(const SeriesPair& p, double t) noexcept {
    const double dt = t - p.t0;
    return {horner(p.s0, dt), horner(p.s1, dt)};
}

int advise_truncation(std::span<const double> bounds_A, std::span<const double> bounds_B, double y0_norm,
                      double y1_norm, double r, double rho, double s, double epsilon) {
    if (bounds_A.empty() || bounds_B.empty()) throw SpecError("advise_truncation: bound sequences must not be empty");
    if (!(rho >= 0.0 && rho < s)) throw SpecError("advise_truncation: requires 0 <= rho < s");
    if (!(s < r) || !std::isfinite(r)) throw SpecError("advise_truncation: requires s < r with r finite");
    if (!(epsilon > 0.0)) throw SpecError("advise_truncation: epsilon must be > 0");
    if (!(y0_norm >= 0.0) || !(y1_norm >= 0.0) || !std::isfinite(y0_norm) || !std::isfinite(y1_norm))
        throw SpecError("advise_truncation: initial-condition norms must be finite and nonnegative");

    const double u = 0.5 * (r + s);
    double C = 0.0;
    for (auto bounds : {bounds_A, bounds_B}) {
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            if (!(bounds[i] >= 0.0) || !std::isfinite(bounds[i]))
                throw SpecError("advise_truncation: bounds must be finite and nonnegative");
            C = std::max(C, bounds[i] * std::pow(u, static_cast<double>(i)));
        }
    }

    constexpr long kMaxSteps = 100'000'000;
    long n = 0;
    for (;; ++n) {
        if (n > kMaxSteps) throw NumericalError("advise_truncation: no admissible n found for the bound constant");
        const double nd = static_cast<double>(n);
        const double lhs = nd * s / ((nd + 2.0) * u) + C * s / (nd + 2.0) + C * s * s / ((nd + 2.0) * (nd + 1.0));
        if (lhs < 1.0) break;
    }

    double h_prev = y0_norm;
    double h = y1_norm;
    double K = h_prev;
    if (n >= 1) K = std::max(K, h * s);
    double s_pow = s;
    for (long m = 0; m + 2 <= n; ++m) {
        const double md = static_cast<double>(m);
        const double next = (md / ((md + 2.0) * u) + C / (md + 2.0)) * h + C / ((md + 2.0) * (md + 1.0)) * h_prev;
        h_prev = h;
        h = next;
        s_pow *= s;
        K = std::max(K, h * s_pow);
    }

    if (rho == 0.0 || K == 0.0) return 0;
    const double level = std::log(K / (epsilon * (1.0 - rho / s))) / std::log(s / rho);
    if (!std::isfinite(level) || level > static_cast<double>(std::numeric_limits<int>::max()))
        throw NumericalError("advise_truncation: required order overflows");
    // Smallest integer strictly above level - 1.
    return std::max(0, static_cast<int>(std::floor(level)));
}

std::vector<double> advisor_bounds(const CoefficientModel& model) {
    if (!model.sup_norm_bounds.empty()) return model.sup_norm_bounds;
    const auto e = model.extent();
    if (!e)
        throw SpecError("coefficient model has infinitely many coefficients; declare sup_norm_bounds for the advisor");
    std::vector<double> out;
    for (std::size_t n = 0; n < std::max<std::size_t>(*e, 1); ++n) {
        const double b = model.law(n).sup_norm();
        if (!std::isfinite(b))
            throw SpecError("coefficient " + std::to_string(n) + " has an unbounded law; declare sup_norm_bounds");
        out.push_back(b);
    }
    return out;
}

}  // namespace rsode
