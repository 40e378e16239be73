#include "rsode/density_estimator.hpp"

#include "rsode/error.hpp"
#include "rsode/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>
#include <tuple>

namespace rsode {

namespace {

constexpr std::size_t kChunk = 1024;
constexpr std::uint64_t kPilotOffset = std::uint64_t{1} << 63;
constexpr std::uint64_t kFallbackOffset = kPilotOffset + (std::uint64_t{1} << 62);
constexpr std::uint64_t kGridOffset = kPilotOffset + (std::uint64_t{1} << 61);
constexpr std::uint64_t kGridRoleSlot = std::numeric_limits<std::uint64_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stats {
    std::size_t n = 0;
    std::size_t total = 0;
    std::size_t degenerate = 0;
    std::size_t skipped = 0;
    double den_min = kInf;
    double den_max = -kInf;
    double min_abs = kInf;
    std::vector<double> mean;
    std::vector<double> m2;
    std::vector<double> co;
    double cmean = 0.0;
    double cm2 = 0.0;
};

// Pairwise combination of partial statistics (Chan et al.). Merging into an
// empty accumulator copies, so a fold over chunks never depends on how many
// chunks preceded it.
void merge(Stats& into, const Stats& from) {
    into.total += from.total;
    into.degenerate += from.degenerate;
    into.skipped += from.skipped;
    into.den_min = std::min(into.den_min, from.den_min);
    into.den_max = std::max(into.den_max, from.den_max);
    into.min_abs = std::min(into.min_abs, from.min_abs);
    if (from.n == 0) return;
    if (into.n == 0) {
        into.n = from.n;
        into.mean = from.mean;
        into.m2 = from.m2;
        into.co = from.co;
        into.cmean = from.cmean;
        into.cm2 = from.cm2;
        return;
    }
    const double na = static_cast<double>(into.n);
    const double nb = static_cast<double>(from.n);
    const double n = na + nb;
    const double w = na * nb / n;
    const double dc = from.cmean - into.cmean;
    const bool control = !into.co.empty();
    for (std::size_t j = 0; j < into.mean.size(); ++j) {
        const double dz = from.mean[j] - into.mean[j];
        into.mean[j] += dz * nb / n;
        into.m2[j] += from.m2[j] + dz * dz * w;
        if (control) into.co[j] += from.co[j] + dz * dc * w;
    }
    into.cmean += dc * nb / n;
    into.cm2 += from.cm2 + dc * dc * w;
    into.n += from.n;
}

std::uint64_t effective_stream_id(const EstimatorConfig& cfg) {
    if (!cfg.independent_streams) return cfg.stream_id;
    return detail::splitmix_finalize(cfg.stream_id ^ (static_cast<std::uint64_t>(cfg.N) * 0xA24BAED4963EE407ULL));
}

class Sampler {
public:
    Sampler(const ProblemSpec& spec, const EstimatorConfig& cfg, double t, std::span<const double> grid, Role role,
            bool track_control)
        : spec_(spec),
          cfg_(cfg),
          t_(t),
          grid_(grid.begin(), grid.end()),
          role_(role),
          f_init_(role == Role::ViaY0 ? spec.Y0 : spec.Y1),
          other_(role == Role::ViaY0 ? spec.Y1 : spec.Y0),
          track_control_(track_control),
          base_(cfg.seed, effective_stream_id(cfg)),
          deterministic_(spec.deterministic_coefficients()) {
        if (deterministic_) {
            const SeriesPair p = deterministic_series_pair(spec, cfg.N);
            std::tie(s0_, s1_) = eval_series(p, t);
            if (track_control_) control_ = control_of(deterministic_series_pair(spec, cfg.cv.N0));
        }
    }

    [[nodiscard]] const RngStream& base() const { return base_; }

    // Statistics of samples [begin, end) drawn from base.substream(offset + i).
    [[nodiscard]] Stats run_chunk(std::uint64_t offset, std::size_t begin, std::size_t end) const {
        Stats s;
        s.mean.assign(grid_.size(), 0.0);
        s.m2.assign(grid_.size(), 0.0);
        if (track_control_) s.co.assign(grid_.size(), 0.0);
        Scratch w;
        w.kernel.resize(grid_.size());
        for (std::size_t i = begin; i < end; ++i) {
            double c = 0.0;
            if (!draw(base_.substream(offset + i), w, c)) {
                ++s.total;
                ++s.skipped;
                continue;
            }
            const double den = role_ == Role::ViaY0 ? w.s0 : w.s1;
            ++s.total;
            s.den_min = std::min(s.den_min, den);
            s.den_max = std::max(s.den_max, den);
            s.min_abs = std::min(s.min_abs, std::abs(den));
            if (std::abs(den) < cfg_.degenerate_threshold) ++s.degenerate;
            if (den == 0.0 || !std::isfinite(den)) {
                ++s.skipped;
                continue;
            }
            ++s.n;
            const double inv_n = 1.0 / static_cast<double>(s.n);
            const double dc = c - s.cmean;
            s.cmean += dc * inv_n;
            s.cm2 += dc * (c - s.cmean);
            const double dc_new = c - s.cmean;
            evaluate_kernel(w);
            for (std::size_t j = 0; j < grid_.size(); ++j) {
                const double z = w.kernel[j];
                const double dz = z - s.mean[j];
                s.mean[j] += dz * inv_n;
                s.m2[j] += dz * (z - s.mean[j]);
                if (track_control_) s.co[j] += dz * dc_new;
            }
        }
        return s;
    }

    // Chunked run over [begin, end) with chunk boundaries at multiples of kChunk.
    [[nodiscard]] std::vector<Stats> run_chunks(std::uint64_t offset, std::size_t begin, std::size_t end) const {
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        for (std::size_t lo = begin; lo < end;) {
            const std::size_t hi = std::min(end, (lo / kChunk + 1) * kChunk);
            ranges.emplace_back(lo, hi);
            lo = hi;
        }
        std::vector<Stats> out(ranges.size());
        const unsigned workers = std::max(1u, std::min<unsigned>(cfg_.threads, static_cast<unsigned>(ranges.size())));
        if (workers == 1) {
            for (std::size_t k = 0; k < ranges.size(); ++k) out[k] = run_chunk(offset, ranges[k].first, ranges[k].second);
            return out;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= ranges.size() || failed.load()) return;
                    try {
                        out[k] = run_chunk(offset, ranges[k].first, ranges[k].second);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
        return out;
    }

    [[nodiscard]] Stats run(std::uint64_t offset, std::size_t begin, std::size_t end) const {
        Stats total;
        for (const Stats& s : run_chunks(offset, begin, end)) merge(total, s);
        return total;
    }

    // Kernel values at the grid and the control for one sample; NaN kernel when skipped.
    void dump(std::size_t i, std::vector<double>& kernel, double& control) const {
        Scratch w;
        w.kernel.resize(grid_.size());
        control = 0.0;
        const bool ok = draw(base_.substream(i), w, control);
        const double den = role_ == Role::ViaY0 ? w.s0 : w.s1;
        if (!ok || den == 0.0 || !std::isfinite(den)) {
            kernel.assign(grid_.size(), std::numeric_limits<double>::quiet_NaN());
            return;
        }
        evaluate_kernel(w);
        kernel = w.kernel;
    }

private:
    struct Scratch {
        std::vector<double> a;
        std::vector<double> b;
        std::vector<double> x0;
        std::vector<double> x1;
        std::vector<double> kernel;
        double s0 = 0.0;
        double s1 = 0.0;
        double y = 0.0;
    };

    [[nodiscard]] double control_of(const SeriesPair& p) const {
        const auto [c0, c1] = eval_series(p, t_);
        return cfg_.cv.which == Control::S0 ? c0 : c1;
    }

    bool draw(const RngStream& stream, Scratch& w, double& control) const {
        RngStream other_rng = stream.substream(kInitialSlot);
        w.y = other_.sample(other_rng);
        if (deterministic_) {
            w.s0 = s0_;
            w.s1 = s1_;
            control = control_;
            return std::isfinite(w.y);
        }
        const int N = cfg_.N;
        const int order_needed = track_control_ ? std::max(N, cfg_.cv.N0) : N;
        const auto count = static_cast<std::size_t>(std::max(order_needed - 1, 0));
        sample_coefficients(spec_.A, 'A', count, stream, w.a);
        sample_coefficients(spec_.B, 'B', count, stream, w.b);
        const double dt = t_ - spec_.t0;
        recur_coefficients_into(w.a, w.b, 1.0, 0.0, N, w.x0);
        recur_coefficients_into(w.a, w.b, 0.0, 1.0, N, w.x1);
        w.s0 = horner(w.x0, dt);
        w.s1 = horner(w.x1, dt);
        if (track_control_) {
            const int N0 = cfg_.cv.N0;
            if (cfg_.cv.which == Control::S0) {
                recur_coefficients_into(w.a, w.b, 1.0, 0.0, N0, w.x0);
                control = horner(w.x0, dt);
            } else {
                recur_coefficients_into(w.a, w.b, 0.0, 1.0, N0, w.x1);
                control = horner(w.x1, dt);
            }
        }
        return std::isfinite(w.y);
    }

    void evaluate_kernel(Scratch& w) const {
        const double num_shift = role_ == Role::ViaY0 ? w.y * w.s1 : w.y * w.s0;
        const double den = role_ == Role::ViaY0 ? w.s0 : w.s1;
        const double inv = 1.0 / den;
        const double scale = 1.0 / std::abs(den);
        for (std::size_t j = 0; j < grid_.size(); ++j)
            w.kernel[j] = f_init_.density((grid_[j] - num_shift) * inv) * scale;
    }

    const ProblemSpec& spec_;
    const EstimatorConfig& cfg_;
    double t_;
    std::vector<double> grid_;
    Role role_;
    const Distribution& f_init_;
    const Distribution& other_;
    bool track_control_;
    RngStream base_;
    bool deterministic_;
    double s0_ = 0.0;
    double s1_ = 0.0;
    double control_ = 0.0;
};

struct CvState {
    bool active = false;
    std::vector<double> c;
    double tau = 0.0;
    double var = 0.0;
    bool exact = true;
    std::vector<std::string> warnings;
};

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw SpecError("evaluation grid must not be empty");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!std::isfinite(grid[j])) throw SpecError("evaluation grid contains a non-finite point");
        if (j > 0 && !(grid[j] > grid[j - 1])) throw SpecError("evaluation grid must be strictly increasing");
    }
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

DensityEstimate finalize(const Stats& s, const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                         std::span<const double> grid, Role role, const CvState* cv) {
    if (s.n == 0)
        throw NumericalError("every sample had a vanishing denominator at t=" + format_double(t) +
                             "; try the other role or a different t");
    DensityEstimate e;
    e.t = t;
    e.grid.assign(grid.begin(), grid.end());
    e.config = cfg;
    e.role = role;
    e.used_samples = s.n;
    const std::size_t G = grid.size();
    const double n = static_cast<double>(s.n);
    const double dof = s.n > 1 ? n - 1.0 : 1.0;
    e.values.resize(G);
    e.sample_variance.resize(G);
    e.std_errors.resize(G);
    if (cv) {
        e.crude_values.resize(G);
        e.crude_variance.resize(G);
        e.correlation.resize(G);
        e.control_coefficient = cv->c;
        e.control_mean = cv->tau;
        e.control_variance = cv->var;
        e.control_exact = cv->exact;
    }
    for (std::size_t j = 0; j < G; ++j) {
        const double var_z = s.n > 1 ? s.m2[j] / dof : 0.0;
        double value = s.mean[j];
        double var = var_z;
        if (cv) {
            const double c = cv->c[j];
            const double var_c = s.n > 1 ? s.cm2 / dof : 0.0;
            const double cov = s.n > 1 ? s.co[j] / dof : 0.0;
            e.crude_values[j] = s.mean[j];
            e.crude_variance[j] = var_z;
            const double denom = std::sqrt(s.m2[j] * s.cm2);
            e.correlation[j] = denom > 0.0 ? std::clamp(s.co[j] / denom, -1.0, 1.0) : 0.0;
            value = s.mean[j] + c * (s.cmean - cv->tau);
            var = std::max(0.0, var_z + c * c * var_c + 2.0 * c * cov);
        }
        e.values[j] = std::max(0.0, value);
        e.sample_variance[j] = var;
        e.std_errors[j] = std::sqrt(var / n);
    }

    auto& d = e.diagnostics;
    d.min_abs_denominator = s.min_abs;
    d.denominator_min = s.den_min;
    d.denominator_max = s.den_max;
    d.sign_change = s.den_min < 0.0 && s.den_max > 0.0;
    d.degenerate_count = s.degenerate;
    d.skipped = s.skipped;
    d.degenerate_fraction = s.total > 0 ? static_cast<double>(s.degenerate) / static_cast<double>(s.total) : 0.0;
    const char* den_name = role == Role::ViaY0 ? "S0" : "S1";
    if (d.degenerate_fraction > cfg.degenerate_fraction_warn)
        d.warnings.push_back(std::string("near-zero denominator: ") + format_double(100.0 * d.degenerate_fraction) +
                             "% of sampled " + den_name + "^N(t) are below " + format_double(cfg.degenerate_threshold) +
                             " in magnitude; the estimator variance may be infinite");
    if (d.sign_change)
        d.warnings.push_back(std::string("near-zero denominator: sampled ") + den_name + "^N(t) changes sign (range [" +
                             format_double(s.den_min) + ", " + format_double(s.den_max) +
                             "]); some paths vanish near t=" + format_double(t) +
                             " and the estimator variance may be infinite");
    if (s.skipped > 0)
        d.warnings.push_back(std::to_string(s.skipped) + " sample(s) skipped with an exactly zero denominator");
    for (const auto& w : spec.warnings(cfg.N)) d.warnings.push_back(w);
    if (cv)
        for (const auto& w : cv->warnings) d.warnings.push_back(w);
    return e;
}

CvState prepare_control(const ProblemSpec& spec, const EstimatorConfig& cfg, double t, const Sampler& sampler) {
    CvState cv;
    const ControlMoments cm =
        control_moments(spec, cfg.cv.N0, cfg.cv.which, t, sampler.base().substream(kFallbackOffset));
    cv.tau = cm.mean;
    cv.var = cm.variance;
    cv.exact = cm.exact;
    if (!cm.exact)
        cv.warnings.push_back("control moments exceeded the symbolic term budget; using sampled moments");
    const double scale = std::max(1.0, cm.mean * cm.mean);
    if (!(cm.variance > 1e-14 * scale)) {
        cv.c.assign(0, 0.0);
        cv.warnings.push_back(std::string("control variate ") + control_name(cfg.cv.which) +
                              "^N0(t) has zero variance; falling back to the crude estimator");
        return cv;
    }
    const Stats pilot = sampler.run(kPilotOffset, 0, cfg.cv.pilot_M);
    cv.active = true;
    cv.c.resize(pilot.mean.size());
    const double dof = pilot.n > 1 ? static_cast<double>(pilot.n) - 1.0 : 1.0;
    for (std::size_t j = 0; j < cv.c.size(); ++j) cv.c[j] = -(pilot.co[j] / dof) / cm.variance;
    return cv;
}

}  // namespace

const char* role_name(Role r) noexcept { return r == Role::ViaY0 ? "ViaY0" : "ViaY1"; }

Role role_from_name(std::string_view name) {
    if (name == "ViaY0" || name == "Y0" || name == "y0") return Role::ViaY0;
    if (name == "ViaY1" || name == "Y1" || name == "y1") return Role::ViaY1;
    throw SpecError("unknown role '" + std::string(name) + "' (expected ViaY0 or ViaY1)");
}

const char* method_name(Method m) noexcept { return m == Method::Crude ? "crude" : "control_variates"; }

Method method_from_name(std::string_view name) {
    if (name == "crude") return Method::Crude;
    if (name == "control_variates" || name == "cv") return Method::ControlVariates;
    throw SpecError("unknown method '" + std::string(name) + "' (expected crude or control_variates)");
}

void EstimatorConfig::validate() const {
    if (N < 1) throw SpecError("truncation order N must be >= 1, got " + std::to_string(N));
    if (M < 1) throw SpecError("sample count M must be >= 1");
    if (threads < 1) throw SpecError("threads must be >= 1");
    if (!(degenerate_threshold >= 0.0)) throw SpecError("degenerate threshold must be >= 0");
    if (!(degenerate_fraction_warn >= 0.0)) throw SpecError("degenerate warning fraction must be >= 0");
    if (method == Method::ControlVariates) {
        if (cv.N0 < 1 || cv.N0 >= N)
            throw SpecError("control order N0 must satisfy 1 <= N0 < N (N0=" + std::to_string(cv.N0) +
                            ", N=" + std::to_string(N) + ")");
        if (cv.pilot_M < 2) throw SpecError("pilot sample count must be >= 2");
        if (cv.pilot_M > M) throw SpecError("pilot sample count must not exceed M");
    }
}

Role resolve_role(const ProblemSpec& spec, const EstimatorConfig& cfg) {
    const Role role = cfg.role.value_or(spec.Y0.is_continuous() ? Role::ViaY0 : Role::ViaY1);
    const Distribution& f = role == Role::ViaY0 ? spec.Y0 : spec.Y1;
    if (!f.is_continuous())
        throw SpecError(std::string("role ") + role_name(role) + " needs an absolutely continuous " +
                        (role == Role::ViaY0 ? "Y0" : "Y1") + ", got " + std::string(family_name(f.family())));
    return role;
}

double density_kernel(double x, double s0, double s1, double y_other, Role role, const Distribution& f_init) {
    const double den = role == Role::ViaY0 ? s0 : s1;
    if (den == 0.0) throw NumericalError("density kernel with a zero denominator");
    const double shift = role == Role::ViaY0 ? y_other * s1 : y_other * s0;
    return f_init.density((x - shift) / den) / std::abs(den);
}

DensityEstimate estimate_crude(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                               std::span<const double> grid) {
    cfg.validate();
    check_grid(grid);
    const Role role = resolve_role(spec, cfg);
    EstimatorConfig crude = cfg;
    crude.method = Method::Crude;
    const Sampler sampler(spec, crude, t, grid, role, false);
    return finalize(sampler.run(0, 0, crude.M), spec, crude, t, grid, role, nullptr);
}

DensityEstimate estimate_control_variates(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                          std::span<const double> grid) {
    EstimatorConfig c = cfg;
    c.method = Method::ControlVariates;
    c.validate();
    check_grid(grid);
    const Role role = resolve_role(spec, c);
    const Sampler sampler(spec, c, t, grid, role, true);
    CvState cv = prepare_control(spec, c, t, sampler);
    if (!cv.active) cv.c.assign(grid.size(), 0.0);
    return finalize(sampler.run(0, 0, c.M), spec, c, t, grid, role, &cv);
}

DensityEstimate estimate(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                         std::span<const double> grid) {
    return cfg.method == Method::Crude ? estimate_crude(spec, cfg, t, grid)
                                       : estimate_control_variates(spec, cfg, t, grid);
}

std::vector<DensityEstimate> estimate_prefixes(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                               std::span<const double> grid, std::span<const std::size_t> prefixes) {
    cfg.validate();
    check_grid(grid);
    const Role role = resolve_role(spec, cfg);
    std::size_t max_p = 0;
    for (std::size_t P : prefixes) {
        if (P < 1 || P > cfg.M) throw SpecError("prefix sizes must lie in [1, M]");
        max_p = std::max(max_p, P);
    }
    const bool cv_method = cfg.method == Method::ControlVariates;
    const Sampler sampler(spec, cfg, t, grid, role, cv_method);
    CvState cv;
    if (cv_method) {
        cv = prepare_control(spec, cfg, t, sampler);
        if (!cv.active) cv.c.assign(grid.size(), 0.0);
    }
    const std::size_t full = max_p / kChunk;
    const std::vector<Stats> chunks = sampler.run_chunks(0, 0, full * kChunk);
    std::vector<DensityEstimate> out;
    out.reserve(prefixes.size());
    for (std::size_t P : prefixes) {
        Stats total;
        const std::size_t k = P / kChunk;
        for (std::size_t c = 0; c < k; ++c) merge(total, chunks[c]);
        if (P % kChunk != 0) merge(total, sampler.run_chunk(0, k * kChunk, P));
        EstimatorConfig echo = cfg;
        echo.M = P;
        out.push_back(finalize(total, spec, echo, t, grid, role, cv_method ? &cv : nullptr));
    }
    return out;
}

SampleDump dump_samples(const ProblemSpec& spec, const EstimatorConfig& cfg, double t, std::span<const double> xs,
                        std::size_t begin, std::size_t end) {
    EstimatorConfig c = cfg;
    c.method = Method::ControlVariates;
    if (c.cv.N0 >= c.N) c.cv.N0 = c.N - 1;
    const Role role = resolve_role(spec, c);
    const Sampler sampler(spec, c, t, xs, role, true);
    SampleDump d;
    d.kernel.assign(xs.size(), {});
    std::vector<double> k;
    for (std::size_t i = begin; i < end; ++i) {
        double control = 0.0;
        sampler.dump(i, k, control);
        d.control.push_back(control);
        for (std::size_t j = 0; j < xs.size(); ++j) d.kernel[j].push_back(k[j]);
    }
    return d;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw SpecError("linspace needs at least 2 points");
    if (!(lo < hi)) throw SpecError("linspace needs lo < hi");
    std::vector<double> out(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
    out.back() = hi;
    return out;
}

std::vector<double> auto_grid(const ProblemSpec& spec, const EstimatorConfig& cfg, double t, std::size_t points,
                              std::size_t pilot) {
    if (pilot < 10) throw SpecError("auto_grid needs at least 10 pilot samples");
    const Role role = resolve_role(spec, cfg);
    const Distribution& role_law = role == Role::ViaY0 ? spec.Y0 : spec.Y1;
    const Distribution& other_law = role == Role::ViaY0 ? spec.Y1 : spec.Y0;
    const RngStream base = RngStream(cfg.seed, cfg.stream_id).substream(kGridOffset);
    const bool deterministic = spec.deterministic_coefficients();
    SeriesPair fixed;
    if (deterministic) fixed = deterministic_series_pair(spec, cfg.N);
    std::vector<double> xs;
    xs.reserve(pilot);
    for (std::size_t i = 0; i < pilot; ++i) {
        const RngStream s = base.substream(i);
        const SeriesPair p = deterministic ? fixed : realize_series_pair(spec, cfg.N, s);
        const auto [s0, s1] = eval_series(p, t);
        RngStream r_other = s.substream(kInitialSlot);
        RngStream r_role = s.substream(kGridRoleSlot);
        const double yo = other_law.sample(r_other);
        const double yr = role_law.sample(r_role);
        const double y0 = role == Role::ViaY0 ? yr : yo;
        const double y1 = role == Role::ViaY0 ? yo : yr;
        const double x = y0 * s0 + y1 * s1;
        if (std::isfinite(x)) xs.push_back(x);
    }
    if (xs.size() < 10) throw NumericalError("auto_grid: sampled solution values are not finite");
    const auto q = [&](double p) {
        const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(xs.size() - 1)));
        std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
        return xs[k];
    };
    double lo = q(1e-4);
    double hi = q(1.0 - 1e-4);
    double span = hi - lo;
    if (!(span > 1e-12 * (1.0 + std::abs(lo)))) {
        lo -= 1.0;
        hi += 1.0;
        span = hi - lo;
    }
    return linspace(lo - 0.2 * span, hi + 0.2 * span, points);
}

std::pair<double, double> exact_fundamental_pair(const ProblemSpec& spec, double t) {
    if (!spec.deterministic_coefficients())
        throw UnsupportedError("closed-form fundamental pair needs deterministic coefficients");
    const auto constant_value = [](const CoefficientModel& m) -> std::optional<double> {
        const auto e = m.extent();
        if (!e) return std::nullopt;
        for (std::size_t n = 1; n < *e; ++n)
            if (m.law(n).params()[0] != 0.0) return std::nullopt;
        return *e == 0 ? 0.0 : m.law(0).params()[0];
    };
    const double tau = t - spec.t0;
    const auto a = constant_value(spec.A);
    const auto b = constant_value(spec.B);
    if (a && b) {
        const double disc = *a * *a - 4.0 * *b;
        if (disc > 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = 0.5 * (-*a + sq);
            const double r2 = 0.5 * (-*a - sq);
            const double e1 = std::exp(r1 * tau);
            const double e2 = std::exp(r2 * tau);
            return {(r1 * e2 - r2 * e1) / (r1 - r2), (e1 - e2) / (r1 - r2)};
        }
        if (disc < 0.0) {
            const double alpha = -0.5 * *a;
            const double omega = 0.5 * std::sqrt(-disc);
            const double g = std::exp(alpha * tau);
            return {g * (std::cos(omega * tau) - alpha / omega * std::sin(omega * tau)),
                    g * std::sin(omega * tau) / omega};
        }
        const double r = -0.5 * *a;
        const double g = std::exp(r * tau);
        return {g * (1.0 - r * tau), tau * g};
    }
    const auto coarse = eval_series(deterministic_series_pair(spec, 100), t);
    const auto fine = eval_series(deterministic_series_pair(spec, 140), t);
    const auto close = [](double u, double v) { return std::abs(u - v) <= 1e-10 * (1.0 + std::abs(v)); };
    if (!close(coarse.first, fine.first) || !close(coarse.second, fine.second) || !std::isfinite(fine.first) ||
        !std::isfinite(fine.second))
        throw NumericalError("power series has not converged at t=" + format_double(t) +
                             "; t may lie outside the radius of convergence");
    return fine;
}

double exact_density(const ProblemSpec& spec, double t, double x, std::optional<Role> role, std::optional<int> N) {
    if (!spec.deterministic_coefficients())
        throw UnsupportedError("exact density is only available for deterministic coefficients");
    const auto [s0, s1] = N ? eval_series(deterministic_series_pair(spec, *N), t) : exact_fundamental_pair(spec, t);
    Role r = role.value_or(spec.Y0.is_continuous() ? Role::ViaY0 : Role::ViaY1);
    if (!role) {
        const bool y0c = spec.Y0.is_continuous();
        const bool y1c = spec.Y1.is_continuous();
        if (r == Role::ViaY0 && s0 == 0.0 && y1c) r = Role::ViaY1;
        if (r == Role::ViaY1 && s1 == 0.0 && y0c) r = Role::ViaY0;
    }
    const Distribution& f = r == Role::ViaY0 ? spec.Y0 : spec.Y1;
    const Distribution& other = r == Role::ViaY0 ? spec.Y1 : spec.Y0;
    if (!f.is_continuous())
        throw SpecError(std::string("exact density via ") + role_name(r) + " needs an absolutely continuous law");
    const double den = r == Role::ViaY0 ? s0 : s1;
    const double mult = r == Role::ViaY0 ? s1 : s0;
    if (den == 0.0) throw NumericalError("exact density: the role denominator vanishes at this t");
    const auto kernel = [&](double y) { return f.density((x - y * mult) / den) / std::abs(den); };
    if (!other.is_continuous()) {
        double sum = 0.0;
        for (const auto& [y, p] : other.atoms()) sum += p * kernel(y);
        return sum;
    }
    const Interval sup = other.support();
    const Interval fs = f.support();
    std::vector<double> cuts{sup.lo, sup.hi};
    if (mult != 0.0) {
        for (double edge : {fs.lo, fs.hi}) {
            if (!std::isfinite(edge)) continue;
            const double y = (x - edge * den) / mult;
            if (y > sup.lo && y < sup.hi) cuts.push_back(y);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += integrate([&](double y) { return other.density(y) * kernel(y); }, cuts[k], cuts[k + 1], 1e-12);
    return total;
}

}  // namespace rsode
