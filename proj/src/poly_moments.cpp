#include "rsode/poly_moments.hpp"

#include "rsode/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace rsode {

const char* control_name(Control c) noexcept { return c == Control::S0 ? "S0" : "S1"; }

Control control_from_name(std::string_view name) {
    if (name == "S0" || name == "s0") return Control::S0;
    if (name == "S1" || name == "s1") return Control::S1;
    throw SpecError("unknown control variate '" + std::string(name) + "' (expected S0 or S1)");
}

SparsePolynomial SparsePolynomial::constant(std::size_t nvars, double c) {
    SparsePolynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
}

SparsePolynomial SparsePolynomial::variable(std::size_t nvars, std::size_t id) {
    if (id >= nvars) throw SpecError("variable id out of range");
    SparsePolynomial p(nvars);
    Exponents e(nvars, 0);
    e[id] = 1;
    p.add_term(e, 1.0);
    return p;
}

bool SparsePolynomial::is_constant() const {
    for (const auto& [e, c] : terms_)
        if (std::any_of(e.begin(), e.end(), [](std::uint16_t k) { return k != 0; })) return false;
    return true;
}

double SparsePolynomial::constant_term() const {
    const auto it = terms_.find(Exponents(nvars_, 0));
    return it == terms_.end() ? 0.0 : it->second;
}

void SparsePolynomial::add_term(const Exponents& e, double c) {
    if (e.size() != nvars_) throw SpecError("exponent vector length does not match the variable count");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

SparsePolynomial& SparsePolynomial::operator+=(const SparsePolynomial& o) {
    if (o.nvars_ != nvars_) throw SpecError("polynomials over different variable sets");
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

SparsePolynomial& SparsePolynomial::operator-=(const SparsePolynomial& o) {
    if (o.nvars_ != nvars_) throw SpecError("polynomials over different variable sets");
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

SparsePolynomial& SparsePolynomial::operator*=(double c) {
    if (c == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
        it->second *= c;
        it = it->second == 0.0 ? terms_.erase(it) : std::next(it);
    }
    return *this;
}

SparsePolynomial SparsePolynomial::times_variable(std::size_t id) const {
    if (id >= nvars_) throw SpecError("variable id out of range");
    SparsePolynomial out(nvars_);
    for (const auto& [e, c] : terms_) {
        Exponents shifted = e;
        if (shifted[id] == std::numeric_limits<std::uint16_t>::max()) throw BudgetError("exponent overflow");
        ++shifted[id];
        out.terms_.emplace_hint(out.terms_.end(), std::move(shifted), c);
    }
    return out;
}

SparsePolynomial operator*(const SparsePolynomial& a, const SparsePolynomial& b) {
    if (a.nvars_ != b.nvars_) throw SpecError("polynomials over different variable sets");
    SparsePolynomial out(a.nvars_);
    SparsePolynomial::Exponents e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
        for (const auto& [eb, cb] : b.terms_) {
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = static_cast<std::uint16_t>(ea[i] + eb[i]);
            out.add_term(e, ca * cb);
        }
    }
    return out;
}

double SparsePolynomial::evaluate(std::span<const double> values) const {
    if (values.size() != nvars_) throw SpecError("evaluate: wrong number of variable values");
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double term = c;
        for (std::size_t i = 0; i < nvars_; ++i)
            if (e[i] != 0) term *= std::pow(values[i], static_cast<double>(e[i]));
        sum += term;
    }
    return sum;
}

std::uint16_t SparsePolynomial::max_exponent(std::size_t id) const {
    std::uint16_t m = 0;
    for (const auto& [e, c] : terms_) m = std::max(m, e[id]);
    return m;
}

double MomentTable::get(std::size_t id, std::size_t k) {
    auto& row = cache_.at(id);
    while (row.size() <= k) row.push_back(inputs_->laws[id].raw_moment(static_cast<int>(row.size())));
    return row[k];
}

double expectation(const SparsePolynomial& p, MomentTable& moments) {
    double sum = 0.0;
    for (const auto& [e, c] : p.terms()) {
        double term = c;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] != 0) term *= moments.get(i, e[i]);
        sum += term;
    }
    return sum;
}

namespace {

struct CoefficientSlot {
    bool random = false;
    std::size_t id = 0;
    double value = 0.0;
};

void check_budget(const SparsePolynomial& p, std::size_t budget) {
    if (p.size() > budget)
        throw BudgetError("symbolic series exceeds the term budget (" + std::to_string(p.size()) + " > " +
                          std::to_string(budget) + ")");
}

}  // namespace

SymbolicSeries symbolic_series(const ProblemSpec& spec, int N0, Control which, std::size_t term_budget) {
    if (N0 < 1) throw SpecError("control order N0 must be >= 1, got " + std::to_string(N0));
    SymbolicSeries out;
    const auto count = static_cast<std::size_t>(N0 - 1);
    std::vector<CoefficientSlot> a(count);
    std::vector<CoefficientSlot> b(count);
    for (const auto& [model, slots, symbol] :
         {std::tuple{&spec.A, &a, 'A'}, std::tuple{&spec.B, &b, 'B'}}) {
        for (std::size_t n = 0; n < count; ++n) {
            Distribution law = model->law(n);
            auto& slot = (*slots)[n];
            if (law.is_point_mass()) {
                slot.value = law.params()[0];
            } else {
                slot.random = true;
                slot.id = out.inputs.laws.size();
                out.inputs.laws.push_back(std::move(law));
                out.inputs.labels.push_back(std::string(1, symbol) + "_" + std::to_string(n));
            }
        }
    }
    const std::size_t nv = out.inputs.laws.size();
    auto& x = out.coeffs;
    x.reserve(static_cast<std::size_t>(N0) + 1);
    x.push_back(SparsePolynomial::constant(nv, which == Control::S0 ? 1.0 : 0.0));
    x.push_back(SparsePolynomial::constant(nv, which == Control::S0 ? 0.0 : 1.0));
    for (std::size_t n = 0; n + 2 <= static_cast<std::size_t>(N0); ++n) {
        SparsePolynomial sum(nv);
        for (std::size_t m = 0; m <= n; ++m) {
            const auto& ak = a[n - m];
            const auto& bk = b[n - m];
            const double w = static_cast<double>(m + 1);
            if (ak.random) {
                sum += w * x[m + 1].times_variable(ak.id);
            } else if (ak.value != 0.0) {
                sum += x[m + 1] * (w * ak.value);
            }
            if (bk.random) {
                sum += x[m].times_variable(bk.id);
            } else if (bk.value != 0.0) {
                sum += x[m] * bk.value;
            }
            check_budget(sum, term_budget);
        }
        sum *= -1.0 / (static_cast<double>(n + 2) * static_cast<double>(n + 1));
        x.push_back(std::move(sum));
    }
    return out;
}

SparsePolynomial evaluate_at(const SymbolicSeries& s, double t, double t0) {
    const std::size_t nv = s.inputs.laws.size();
    SparsePolynomial p(nv);
    const double dt = t - t0;
    double power = 1.0;
    for (const auto& c : s.coeffs) {
        if (power != 0.0) p += c * power;
        power *= dt;
    }
    return p;
}

std::pair<double, double> mean_and_variance(const SymbolicSeries& s, double t, double t0, std::size_t term_budget) {
    MomentTable moments(s.inputs);
    const SparsePolynomial p = evaluate_at(s, t, t0);
    const double mean = expectation(p, moments);
    const SparsePolynomial q = p - SparsePolynomial::constant(p.nvars(), mean);
    // Squaring costs size^2 products; allow a hundredfold of the term budget.
    if (q.size() > 0 && q.size() > 100 * term_budget / q.size())
        throw BudgetError("squaring the control polynomial exceeds the work budget");
    const SparsePolynomial q2 = q * q;
    check_budget(q2, term_budget);
    double var = expectation(q2, moments);
    if (var < 0.0) {
        const double tol = 1e-12 * std::max(1.0, mean * mean);
        if (var < -tol) throw NumericalError("negative variance " + std::to_string(var) + " from the moment engine");
        var = 0.0;
    }
    return {mean, var};
}

ControlMoments control_moments(const ProblemSpec& spec, int N0, Control which, double t,
                               const RngStream& fallback_stream, std::size_t term_budget,
                               std::size_t fallback_samples) {
    try {
        const SymbolicSeries s = symbolic_series(spec, N0, which, term_budget);
        const auto [mean, var] = mean_and_variance(s, t, spec.t0, term_budget);
        std::size_t terms = 0;
        for (const auto& c : s.coeffs) terms = std::max(terms, c.size());
        return {mean, var, true, terms};
    } catch (const BudgetError&) {
        if (fallback_samples < 2) throw;
    }
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t j = 0; j < fallback_samples; ++j) {
        const SeriesPair pair = realize_series_pair(spec, N0, fallback_stream.substream(j));
        const auto [s0, s1] = eval_series(pair, t);
        const double v = which == Control::S0 ? s0 : s1;
        const double delta = v - mean;
        mean += delta / static_cast<double>(j + 1);
        m2 += delta * (v - mean);
    }
    return {mean, m2 / static_cast<double>(fallback_samples - 1), false, 0};
}

}  // namespace rsode
