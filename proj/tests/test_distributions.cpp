#include "oracles.hpp"

#include "rsode/distribution.hpp"
#include "rsode/error.hpp"
#include "rsode/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using rsode::Distribution;
using rsode::RngStream;

namespace {

struct SampleStats {
    double mean = 0.0;
    double var = 0.0;
};

SampleStats draw(const Distribution& d, int n, std::uint64_t seed = 7) {
    const RngStream base(seed, 0);
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        RngStream r = base.substream(static_cast<std::uint64_t>(i));
        const double y = d.sample(r);
        s += y;
        s2 += y * y;
    }
    const double m = s / n;
    return {m, s2 / n - m * m};
}

}  // namespace

TEST_CASE("point mass") {
    const auto d = Distribution::point_mass(2.5);
    RngStream r(1, 2);
    CHECK(d.sample(r) == 2.5);
    CHECK(d.raw_moment(3) == doctest::Approx(15.625).epsilon(1e-15));
    CHECK(d.variance() == 0.0);
    const auto atoms = d.atoms();
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].first == 2.5);
    CHECK(atoms[0].second == 1.0);
    CHECK(d.is_discrete());
}

TEST_CASE("truncated gamma keeps the contained mass and renormalizes") {
    // Gamma(shape 2, rate 2) restricted to [0, 4].
    const auto d = Distribution::gamma(2, 2).truncated(0, 4);
    const double mass = 1.0 - 9.0 * std::exp(-8.0);
    CHECK(d.contained_probability() == doctest::Approx(mass).epsilon(1e-12));

    const auto pdf = [&](double y) { return 4.0 * y * std::exp(-2.0 * y) / mass; };
    const double mean = oracle::simpson([&](double y) { return y * pdf(y); }, 0.0, 4.0);
    const double second = oracle::simpson([&](double y) { return y * y * pdf(y); }, 0.0, 4.0);
    CHECK(d.mean() == doctest::Approx(mean).epsilon(1e-9));
    CHECK(d.raw_moment(2) == doctest::Approx(second).epsilon(1e-9));
    CHECK(d.density(1.0) == doctest::Approx(pdf(1.0)).epsilon(1e-12));
    CHECK(d.density(4.5) == 0.0);
    CHECK(d.sup_norm() == 4.0);

    const int n = 200000;
    const auto s = draw(d, n);
    const double se = std::sqrt((second - mean * mean) / n);
    CHECK(std::abs(s.mean - mean) < 4.0 * se);
}

TEST_CASE("custom density is renormalized and has the expected moments") {
    const auto d = Distribution::custom("sqrt(2)/(pi*(1+y^4))");
    CHECK(d.density(0.0) == doctest::Approx(std::numbers::sqrt2 / std::numbers::pi).epsilon(1e-6));
    CHECK(d.mean() == doctest::Approx(0.0).epsilon(1e-8));
    // Integral of y^2/(1+y^4) over the line is pi/sqrt(2).
    CHECK(d.raw_moment(2) == doctest::Approx(1.0).epsilon(1e-6));

    const auto s = draw(d, 100000);
    CHECK(std::abs(s.mean) < 4.0 * std::sqrt(1.0 / 100000));
}

TEST_CASE("closed-form moments") {
    const auto b = Distribution::beta(11, 15);
    CHECK(b.mean() == doctest::Approx(11.0 / 26.0).epsilon(1e-14));
    CHECK(b.variance() == doctest::Approx(165.0 / (676.0 * 27.0)).epsilon(1e-12));
    CHECK(Distribution::uniform(0, 1).raw_moment(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto p = Distribution::poisson(2);
    CHECK(p.raw_moment(1) == doctest::Approx(2.0));
    CHECK(p.raw_moment(2) == doctest::Approx(6.0));
    CHECK(p.raw_moment(3) == doctest::Approx(22.0));
    const auto nrm = Distribution::normal(2, 1);
    CHECK(nrm.raw_moment(4) == doctest::Approx(16.0 + 6.0 * 4.0 + 3.0));
    CHECK(Distribution::exponential(2).raw_moment(2) == doctest::Approx(0.5));
    CHECK(Distribution::bernoulli(0.35).raw_moment(5) == doctest::Approx(0.35));
}

TEST_CASE("samplers match their laws") {
    SUBCASE("bernoulli frequency") {
        const auto s = draw(Distribution::bernoulli(0.35), 100000);
        CHECK(std::abs(s.mean - 0.35) < 4.0 * std::sqrt(0.35 * 0.65 / 100000));
    }
    SUBCASE("gamma with shape below one") {
        const auto s = draw(Distribution::gamma(0.5, 1.0), 100000);
        CHECK(std::abs(s.mean - 0.5) < 4.0 * std::sqrt(0.5 / 100000));
    }
    SUBCASE("poisson on both sampler branches") {
        for (double lambda : {2.0, 45.0}) {
            const auto s = draw(Distribution::poisson(lambda), 100000);
            CHECK(std::abs(s.mean - lambda) < 4.0 * std::sqrt(lambda / 100000));
            CHECK(s.var == doctest::Approx(lambda).epsilon(0.03));
        }
    }
    SUBCASE("normal") {
        const auto s = draw(Distribution::normal(2, 1), 100000);
        CHECK(std::abs(s.mean - 2.0) < 4.0 * std::sqrt(1.0 / 100000));
        CHECK(s.var == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("beta") {
        const auto s = draw(Distribution::beta(11, 15), 100000);
        CHECK(std::abs(s.mean - 11.0 / 26.0) < 4.0 * std::sqrt(0.009 / 100000));
    }
}

TEST_CASE("truncated discrete law stays inside its window") {
    const auto d = Distribution::poisson(2).truncated(1, 3);
    const RngStream base(3, 0);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        RngStream r = base.substream(i);
        const double y = d.sample(r);
        CHECK((y == 1.0 || y == 2.0 || y == 3.0));
    }
    // P(1), P(2), P(3) of Poisson(2): 2e^-2, 2e^-2, 4/3 e^-2.
    const double z = 2.0 + 2.0 + 4.0 / 3.0;
    CHECK(d.mass(2.0) == doctest::Approx(2.0 / z).epsilon(1e-12));
    CHECK(d.mean() == doctest::Approx((2.0 + 4.0 + 4.0) / z).epsilon(1e-10));
}

TEST_CASE("continuous densities integrate to one") {
    for (const auto& d : {Distribution::normal(2, 1), Distribution::gamma(2, 2), Distribution::beta(11, 15),
                          Distribution::uniform(-1, 1), Distribution::exponential(2)}) {
        const auto s = d.support();
        const double lo = std::isfinite(s.lo) ? s.lo : -12.0;
        const double hi = std::isfinite(s.hi) ? s.hi : 40.0;
        CHECK(oracle::simpson([&](double y) { return d.density(y); }, lo, hi, 200000) ==
              doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("sampling is a pure function of the stream") {
    const auto d = Distribution::gamma(2, 2);
    RngStream a(99, 4);
    RngStream b(99, 4);
    for (int i = 0; i < 100; ++i) CHECK(d.sample(a) == d.sample(b));
}

TEST_CASE("invalid parameters and unsupported queries") {
    CHECK_THROWS_AS((void)Distribution::normal(0, -1), rsode::SpecError);
    CHECK_THROWS_AS((void)Distribution::beta(0, 1), rsode::SpecError);
    CHECK_THROWS_AS((void)Distribution::uniform(1, 1), rsode::SpecError);
    CHECK_THROWS_AS((void)Distribution::bernoulli(1.5), rsode::SpecError);
    CHECK_THROWS_AS((void)Distribution::normal(0, 1).truncated(5, 4), rsode::SpecError);
    CHECK_THROWS_AS((void)Distribution::poisson(2).density(1.0), rsode::UnsupportedError);
    CHECK_THROWS_AS((void)rsode::family_from_name("cauchy"), rsode::SpecError);
}
