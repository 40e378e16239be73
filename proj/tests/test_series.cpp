#include "oracles.hpp"

#include "rsode/error.hpp"
#include "rsode/expression.hpp"
#include "rsode/series.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace rsode;

TEST_CASE("harmonic oscillator gives cosine and sine coefficients") {
    const std::vector<double> a;
    const std::vector<double> b{1.0};
    const auto c = recur_coefficients(a, b, 1.0, 0.0, 20);
    const auto s = recur_coefficients(a, b, 0.0, 1.0, 20);
    for (int n = 0; n <= 20; ++n) {
        const double sign = (n / 2) % 2 ? -1.0 : 1.0;
        const double cos_n = n % 2 ? 0.0 : sign / oracle::factorial(n);
        const double sin_n = n % 2 ? sign / oracle::factorial(n) : 0.0;
        CHECK(std::abs(c[n] - cos_n) < 1e-15);
        CHECK(std::abs(s[n] - sin_n) < 1e-15);
    }
}

TEST_CASE("second coefficient") {
    const std::vector<double> a{0.3, 1.0};
    const std::vector<double> b{-2.0, 4.0};
    const auto x = recur_coefficients(a, b, 1.5, -0.5, 2);
    REQUIRE(x.size() == 3);
    CHECK(x[2] == doctest::Approx(-(0.3 * -0.5 + -2.0 * 1.5) / 2.0).epsilon(1e-15));
}

TEST_CASE("Airy equation keeps every third coefficient") {
    // x'' + t x = 0: (n+2)(n+1) X_{n+2} = -X_{n-1}.
    const std::vector<double> b{0.0, 1.0};
    const auto x = recur_coefficients({}, b, 1.0, 0.0, 15);
    std::vector<double> ref(16, 0.0);
    ref[0] = 1.0;
    for (int n = 1; n + 2 <= 15; ++n) ref[n + 2] = -ref[n - 1] / ((n + 2.0) * (n + 1.0));
    for (int n = 0; n <= 15; ++n) {
        CHECK(x[n] == doctest::Approx(ref[n]).epsilon(1e-14));
        if (n % 3) CHECK(x[n] == 0.0);
    }
    CHECK(x[3] == doctest::Approx(-1.0 / 6.0));
    CHECK(x[6] == doctest::Approx(1.0 / 180.0));
}

TEST_CASE("series agrees with a Runge-Kutta integration") {
    const std::vector<double> a{4.0, 0.7};
    const std::vector<double> b{1.3, 1.0};
    const double y0 = 2.2;
    const double y1 = 1.0;
    const auto x = recur_coefficients(a, b, y0, y1, 40);
    const auto [ref, dref] = oracle::rk4([&](double t) { return a[0] + a[1] * t; },
                                         [&](double t) { return b[0] + b[1] * t; }, y0, y1, 0.0, 0.5);
    CHECK(std::abs(horner(x, 0.5) - ref) < 1e-9);
}

TEST_CASE("padding coefficients with zeros changes nothing") {
    const std::vector<double> a{0.41, 0.13, -0.2};
    const std::vector<double> b{1.7, 0.0, 0.33};
    std::vector<double> ap = a;
    std::vector<double> bp = b;
    ap.resize(30, 0.0);
    bp.resize(30, 0.0);
    const auto u = recur_coefficients(a, b, 0.3, -1.1, 25);
    const auto p = recur_coefficients(ap, bp, 0.3, -1.1, 25);
    REQUIRE(u.size() == p.size());
    CHECK(std::memcmp(u.data(), p.data(), u.size() * sizeof(double)) == 0);
}

TEST_CASE("order below one is rejected") {
    CHECK_THROWS_AS((void)recur_coefficients({}, {}, 1.0, 0.0, 0), SpecError);
}

TEST_CASE("zero dynamics gives the affine pair") {
    ProblemSpec spec;
    spec.t0 = 1.0;
    const auto pair = deterministic_series_pair(spec, 6);
    const auto [s0, s1] = eval_series(pair, 3.0);
    CHECK(s0 == 1.0);
    CHECK(s1 == 2.0);
}

TEST_CASE("coefficient draws do not depend on the requested count") {
    CoefficientModel m;
    m.kind = CoefficientModel::Kind::Iid;
    m.family = Distribution::beta(11, 15);
    const RngStream stream(5, 1);
    std::vector<double> few;
    std::vector<double> many;
    sample_coefficients(m, 'A', 4, stream, few);
    sample_coefficients(m, 'A', 12, stream, many);
    REQUIRE(few.size() == 4);
    for (std::size_t i = 0; i < few.size(); ++i) CHECK(few[i] == many[i]);
}

TEST_CASE("coefficient models") {
    SUBCASE("rule with overriding entries") {
        CoefficientModel m;
        m.kind = CoefficientModel::Kind::Rule;
        m.entries = {Distribution::point_mass(0.0)};
        m.rule = Expression("1/n^2", "n");
        m.validate();
        CHECK(m.law(0).params()[0] == 0.0);
        CHECK(m.law(3).params()[0] == doctest::Approx(1.0 / 9.0));
        CHECK_FALSE(m.extent().has_value());
        CHECK(m.deterministic());
    }
    SUBCASE("degree bound ends an iid expansion") {
        CoefficientModel m;
        m.kind = CoefficientModel::Kind::Iid;
        m.family = Distribution::uniform(0, 1);
        m.degree_bound = 2;
        CHECK(m.extent() == std::optional<std::size_t>(3));
        CHECK(m.is_random(2));
        CHECK_FALSE(m.is_random(3));
    }
    SUBCASE("unbounded laws are reported") {
        ProblemSpec spec;
        spec.B.entries = {Distribution::gamma(2, 2)};
        spec.Y0 = Distribution::normal(0, 1);
        CHECK(spec.warnings(4).size() == 1);
    }
    SUBCASE("inconsistent models throw") {
        CoefficientModel m;
        m.kind = CoefficientModel::Kind::Rule;
        CHECK_THROWS_AS(m.validate(), SpecError);
    }
}

TEST_CASE("expressions") {
    CHECK(Expression("1/n^2", "n")(4.0) == doctest::Approx(1.0 / 16.0));
    CHECK(Expression("sqrt(2)/(pi*(1+y^4))", "y")(1.0) == doctest::Approx(std::sqrt(2.0) / (2.0 * M_PI)));
    CHECK(Expression("-2^2", "x")(0.0) == doctest::Approx(-4.0));
    CHECK(Expression("exp(-x)*abs(x-3)", "x")(1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK_THROWS_AS(Expression("1/(n", "n"), SpecError);
    CHECK_THROWS_AS(Expression("m+1", "n"), SpecError);
}

TEST_CASE("truncation advisor") {
    const std::vector<double> bA{4.0, 1.0};
    const std::vector<double> bB{4.0, 1.0};
    SUBCASE("zero distance needs no terms") { CHECK(advise_truncation(bA, bB, 2.0, 2.0, 2.0, 0.0, 1.0, 1e-2) == 0); }
    SUBCASE("tighter targets need more terms") {
        int last = 0;
        for (double eps : {1e-1, 1e-2, 1e-4, 1e-8}) {
            const int n = advise_truncation(bA, bB, 2.0, 2.0, 2.0, 0.5, 1.0, eps);
            CHECK(n >= last);
            last = n;
        }
        CHECK(last > 0);
    }
    SUBCASE("farther times need more terms") {
        CHECK(advise_truncation(bA, bB, 2.0, 2.0, 2.0, 0.8, 1.0, 1e-3) >=
              advise_truncation(bA, bB, 2.0, 2.0, 2.0, 0.4, 1.0, 1e-3));
    }
    SUBCASE("radii must be ordered") {
        CHECK_THROWS_AS((void)advise_truncation(bA, bB, 1.0, 1.0, 2.0, 1.5, 1.0, 1e-2), SpecError);
        CHECK_THROWS_AS((void)advise_truncation(bA, bB, 1.0, 1.0, 1.0, 0.5, 1.5, 1e-2), SpecError);
    }
    SUBCASE("bounds from a polynomial model") {
        CoefficientModel m;
        m.entries = {Distribution::point_mass(4.0), Distribution::uniform(0, 1)};
        const auto b = advisor_bounds(m);
        REQUIRE(b.size() == 2);
        CHECK(b[0] == 4.0);
        CHECK(b[1] == 1.0);
        m.entries.push_back(Distribution::normal(0, 1));
        CHECK_THROWS_AS((void)advisor_bounds(m), SpecError);
    }
}
