#include "oracles.hpp"

#include "rsode/analysis.hpp"
#include "rsode/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace rsode;

namespace {

std::vector<double> normal_on(const std::vector<double>& grid, double mu, double sigma) {
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = oracle::normal_pdf(grid[i], mu, sigma);
    return f;
}

}  // namespace

TEST_CASE("L1 distance of shifted normals") {
    const auto grid = linspace(-12, 14, 20001);
    for (double delta : {0.1, 0.5, 2.0}) {
        const auto f = normal_on(grid, 0, 1);
        const auto g = normal_on(grid, delta, 1);
        const double expect = 4.0 * oracle::normal_cdf(delta / 2.0) - 2.0;
        CHECK(lp_distance(grid, f, g, 1.0) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("total variation and Hellinger relations") {
    const auto grid = linspace(-10, 10, 4001);
    const std::vector<std::pair<double, double>> pairs{{0.0, 1.0}, {0.3, 1.5}, {2.0, 0.5}, {-1.0, 3.0}};
    for (const auto& [mu, sigma] : pairs) {
        const auto f = normal_on(grid, 0, 1);
        const auto g = normal_on(grid, mu, sigma);
        const double tv = tv_distance(grid, f, g);
        const double h = hellinger_distance(grid, f, g);
        CHECK(tv == 0.5 * lp_distance(grid, f, g, 1.0));
        CHECK(h * h <= tv + 1e-12);
        CHECK(tv <= std::sqrt(2.0) * h + 1e-12);
    }
}

TEST_CASE("coverage check") {
    DensityEstimate e;
    e.grid = linspace(-1, 1, 201);
    e.values = normal_on(e.grid, 0, 1);
    CHECK_THROWS_AS(check_coverage(e, 1e-2), GridCoverageError);
    e.grid = linspace(-8, 8, 801);
    e.values = normal_on(e.grid, 0, 1);
    CHECK_NOTHROW(check_coverage(e, 1e-2));
    DensityEstimate other = e;
    other.grid[3] += 1e-3;
    CHECK_THROWS_AS((void)lp_distance(e, other, 1.0), SpecError);
}

TEST_CASE("line fits") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 5, 7, 9};
    const auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)fit_line(std::vector<double>{1}, std::vector<double>{1}), InsufficientDataError);
    const std::vector<double> p{100, 400, 1600};
    const std::vector<double> e{0.1, 0.05, 0.025};
    CHECK(fit_loglog(p, e).slope == doctest::Approx(-0.5));
}

TEST_CASE("regression of reference errors on consecutive differences") {
    SUBCASE("exponential sequences give slope one") {
        std::vector<double> de;
        std::vector<double> E;
        for (int N = 1; N <= 8; ++N) {
            de.push_back(0.7 * std::pow(0.4, N));
            E.push_back(2.5 * std::pow(0.4, N));
        }
        const auto r = regress_error_vs_difference(de, E);
        CHECK(r.alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.beta == doctest::Approx(2.5 / 0.7).epsilon(1e-10));
    }
    SUBCASE("saturated sequences have no usable points") {
        const std::vector<double> de{0.1, 0.1, 0.1, 0.1};
        const std::vector<double> E{0.02, 0.02, 0.02, 0.02};
        CHECK_THROWS_AS((void)regress_error_vs_difference(de, E), InsufficientDataError);
    }
}

TEST_CASE("studies on a problem with a known answer") {
    ProblemSpec spec;
    spec.A.entries = {Distribution::uniform(0, 1)};
    spec.B = CoefficientModel::constants({1.0});
    spec.Y0 = Distribution::normal(0, 1);
    spec.Y1 = Distribution::normal(1, 0.5);
    EstimatorConfig cfg;
    cfg.M = 4000;

    SUBCASE("single order: reference error only") {
        ConvergenceOptions opt;
        opt.L = 20;
        opt.grid_points = 300;
        const auto s = run_convergence(spec, cfg, {{0.5, {6}, {}}}, opt);
        CHECK(s.delta_eps.empty());
        REQUIRE(s.reference_error.size() == 1);
        CHECK(s.reference_error[0].value >= 0.0);
    }
    SUBCASE("consecutive rows and pointwise curves") {
        ConvergenceOptions opt;
        opt.L = 0;
        opt.grid_points = 200;
        const auto s = run_convergence(spec, cfg, {{0.5, {2, 3, 4}, {}}}, opt);
        CHECK(s.delta_eps.size() == 2);
        CHECK(s.pointwise.size() == 2 * 200);
        CHECK(s.reference_error.empty());
        CHECK_THROWS_AS((void)run_convergence(spec, cfg, {{0.5, {3, 40}, {}}}, ConvergenceOptions{}), SpecError);
    }
    SUBCASE("one prefix equal to M gives a single zero row") {
        cfg.N = 5;
        const std::vector<double> times{0.5};
        const std::vector<std::size_t> prefixes{cfg.M};
        const auto s = sampling_error_study(spec, cfg, times, prefixes, 200);
        REQUIRE(s.rows.size() == 1);
        CHECK(s.rows[0].mce == 0.0);
        CHECK(std::isnan(s.slopes[0].slope));
    }
    SUBCASE("shared grid covers every order") {
        const std::vector<int> orders{2, 8};
        const auto g = shared_grid(spec, cfg, 1.0, orders, 100);
        for (int N : orders) {
            EstimatorConfig c = cfg;
            c.N = N;
            const auto own = auto_grid(spec, c, 1.0, 100);
            CHECK(g.front() <= own.front());
            CHECK(g.back() >= own.back());
        }
    }
}
