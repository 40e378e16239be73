#include "rsode/analysis.hpp"

#include "rsode/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace rsode {

namespace {

void same_shape(std::span<const double> grid, std::span<const double> f, std::span<const double> g) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw SpecError("densities must be sampled on the same grid");
}

void same_grid(const DensityEstimate& f, const DensityEstimate& g) {
    if (f.grid != g.grid) throw SpecError("estimates do not share a grid");
}

}  // namespace

double trapezoid(std::span<const double> grid, std::span<const double> f) {
    if (f.size() != grid.size()) throw SpecError("trapezoid: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) sum += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    return sum;
}

double lp_distance(std::span<const double> grid, std::span<const double> f, std::span<const double> g, double p) {
    same_shape(grid, f, g);
    if (!(p >= 1.0)) throw SpecError("lp_distance: p must be >= 1");
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::pow(std::abs(f[i] - g[i]), p);
    return std::pow(trapezoid(grid, d), 1.0 / p);
}

double tv_distance(std::span<const double> grid, std::span<const double> f, std::span<const double> g) {
    return 0.5 * lp_distance(grid, f, g, 1.0);
}

double hellinger_distance(std::span<const double> grid, std::span<const double> f, std::span<const double> g) {
    same_shape(grid, f, g);
    std::vector<double> rf(f.size());
    std::vector<double> rg(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        rf[i] = std::sqrt(std::max(0.0, f[i]));
        rg[i] = std::sqrt(std::max(0.0, g[i]));
    }
    return lp_distance(grid, rf, rg, 2.0) / std::numbers::sqrt2;
}

void check_coverage(const DensityEstimate& f, double tail_tol) {
    const double mass = trapezoid(f.grid, f.values);
    if (std::abs(mass - 1.0) > tail_tol) {
        std::ostringstream os;
        os << "grid [" << f.grid.front() << ", " << f.grid.back() << "] holds mass " << mass << " of the estimate at t="
           << f.t << ", N=" << f.config.N << " (tolerance " << tail_tol << "); extend the grid by about "
           << 0.5 * (f.grid.back() - f.grid.front()) << " on each side";
        throw GridCoverageError(os.str());
    }
}

double lp_distance(const DensityEstimate& f, const DensityEstimate& g, double p, double tail_tol) {
    same_grid(f, g);
    check_coverage(f, tail_tol);
    check_coverage(g, tail_tol);
    return lp_distance(f.grid, f.values, g.values, p);
}

double tv_distance(const DensityEstimate& f, const DensityEstimate& g, double tail_tol) {
    return 0.5 * lp_distance(f, g, 1.0, tail_tol);
}

double hellinger_distance(const DensityEstimate& f, const DensityEstimate& g, double tail_tol) {
    same_grid(f, g);
    check_coverage(f, tail_tol);
    check_coverage(g, tail_tol);
    return hellinger_distance(f.grid, f.values, g.values);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::size_t min_points) {
    if (x.size() != y.size()) throw SpecError("fit_line: size mismatch");
    if (x.size() < std::max<std::size_t>(min_points, 2))
        throw InsufficientDataError("fit needs at least " + std::to_string(std::max<std::size_t>(min_points, 2)) +
                                    " points, got " + std::to_string(x.size()));
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientDataError("fit needs at least two distinct abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_points = x.size();
    return fit;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y, std::size_t min_points) {
    if (x.size() != y.size()) throw SpecError("fit_loglog: size mismatch");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return fit_line(lx, ly, min_points);
}

std::vector<double> shared_grid(const ProblemSpec& spec, const EstimatorConfig& cfg, double t,
                                std::span<const int> orders, std::size_t points) {
    if (orders.empty()) throw SpecError("shared_grid needs at least one order");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int N : orders) {
        EstimatorConfig c = cfg;
        c.N = N;
        const auto g = auto_grid(spec, c, t, 2);
        lo = std::min(lo, g.front());
        hi = std::max(hi, g.back());
    }
    return linspace(lo, hi, points);
}

ConvergenceStudy run_convergence(const ProblemSpec& spec, const EstimatorConfig& cfg,
                                 std::vector<ConvergenceCase> cases, const ConvergenceOptions& options) {
    ConvergenceStudy study;
    study.L = options.L;
    study.M = cfg.M;
    for (auto& c : cases) {
        if (c.orders.empty()) throw SpecError("convergence case without orders");
        std::sort(c.orders.begin(), c.orders.end());
        c.orders.erase(std::unique(c.orders.begin(), c.orders.end()), c.orders.end());
        if (options.L > 0 && options.L <= c.orders.back())
            throw SpecError("reference order L=" + std::to_string(options.L) + " must exceed every listed order");
        if (c.grid.empty()) {
            std::vector<int> all = c.orders;
            if (options.L > 0) all.push_back(options.L);
            c.grid = shared_grid(spec, cfg, c.t, all, options.grid_points);
        }
        std::vector<ConvergenceCell> row;
        for (int N : c.orders) {
            EstimatorConfig e = cfg;
            e.N = N;
            row.push_back({c.t, N, estimate(spec, e, c.t, c.grid)});
        }
        study.cells.push_back(std::move(row));
        if (options.L > 0) {
            EstimatorConfig e = cfg;
            e.N = options.L;
            study.references.emplace_back(estimate(spec, e, c.t, c.grid));
        } else {
            study.references.emplace_back(std::nullopt);
        }
    }
    study.cases = std::move(cases);
    consecutive_differences(study, options.tail_tol);
    return study;
}

void consecutive_differences(ConvergenceStudy& study, double tail_tol) {
    study.delta_eps.clear();
    study.reference_error.clear();
    study.pointwise.clear();
    for (std::size_t k = 0; k < study.cells.size(); ++k) {
        const auto& row = study.cells[k];
        for (std::size_t i = 0; i + 1 < row.size(); ++i) {
            if (row[i + 1].N != row[i].N + 1) continue;
            const DensityEstimate& f = row[i].estimate;
            const DensityEstimate& g = row[i + 1].estimate;
            study.delta_eps.push_back({row[i].t, row[i].N, lp_distance(g, f, 1.0, tail_tol)});
            for (std::size_t j = 0; j < f.grid.size(); ++j)
                study.pointwise.push_back({row[i].t, row[i].N, f.grid[j], std::abs(g.values[j] - f.values[j])});
        }
        if (study.references[k]) {
            for (const auto& cell : row)
                study.reference_error.push_back(
                    {cell.t, cell.N, lp_distance(*study.references[k], cell.estimate, 1.0, tail_tol)});
        }
    }
}

RegressionResult regress_error_vs_difference(std::span<const double> delta_eps, std::span<const double> E) {
    if (delta_eps.size() != E.size()) throw SpecError("regression: size mismatch");
    double min_e = std::numeric_limits<double>::infinity();
    for (double e : E)
        if (e > 0.0) min_e = std::min(min_e, e);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < E.size(); ++i) {
        if (!(E[i] > 0.0) || !(delta_eps[i] > 0.0)) continue;
        if (E[i] <= 2.0 * min_e) continue;
        x.push_back(delta_eps[i]);
        y.push_back(E[i]);
    }
    if (x.size() < 3)
        throw InsufficientDataError("regression needs 3 points before saturation, got " + std::to_string(x.size()));
    const LineFit fit = fit_loglog(x, y, 3);
    RegressionResult r;
    r.alpha = fit.slope;
    r.beta = std::exp(fit.intercept);
    r.n_points = fit.n_points;
    return r;
}

std::vector<RegressionResult> regress_error_vs_difference(const ConvergenceStudy& study) {
    std::vector<RegressionResult> out;
    for (const auto& c : study.cases) {
        std::vector<double> de;
        std::vector<double> e;
        for (const auto& d : study.delta_eps) {
            if (d.t != c.t) continue;
            for (const auto& r : study.reference_error) {
                if (r.t == c.t && r.N == d.N) {
                    de.push_back(d.value);
                    e.push_back(r.value);
                }
            }
        }
        RegressionResult r = regress_error_vs_difference(de, e);
        r.t = c.t;
        out.push_back(r);
    }
    return out;
}

SamplingStudy sampling_error_study(const ProblemSpec& spec, const EstimatorConfig& cfg, std::span<const double> times,
                                   std::span<const std::size_t> prefixes, std::size_t grid_points, double tail_tol) {
    if (prefixes.empty()) throw SpecError("sampling study needs at least one prefix size");
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        if (i > 0 && prefixes[i] <= prefixes[i - 1]) throw SpecError("prefix sizes must be strictly increasing");
        if (prefixes[i] > cfg.M) throw SpecError("prefix sizes must not exceed M");
    }
    SamplingStudy study;
    study.N = cfg.N;
    study.M = cfg.M;
    study.prefixes.assign(prefixes.begin(), prefixes.end());
    std::vector<std::size_t> all(prefixes.begin(), prefixes.end());
    if (all.back() != cfg.M) all.push_back(cfg.M);
    for (double t : times) {
        const std::vector<double> grid = auto_grid(spec, cfg, t, grid_points);
        const auto est = estimate_prefixes(spec, cfg, t, grid, all);
        const DensityEstimate& full = est.back();
        std::vector<double> ps;
        std::vector<double> mces;
        for (std::size_t i = 0; i < prefixes.size(); ++i) {
            const double mce = lp_distance(est[i], full, 1.0, tail_tol);
            study.rows.push_back({t, prefixes[i], mce});
            ps.push_back(static_cast<double>(prefixes[i]));
            mces.push_back(mce);
        }
        SlopeRow s{t, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0};
        try {
            const LineFit fit = fit_loglog(ps, mces);
            s.slope = fit.slope;
            s.intercept = fit.intercept;
            s.n_points = fit.n_points;
        } catch (const InsufficientDataError&) {
        }
        study.slopes.push_back(s);
    }
    return study;
}

}  // namespace rsode
