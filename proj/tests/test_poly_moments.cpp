#include "rsode/error.hpp"
#include "rsode/poly_moments.hpp"

#include <doctest.h>

#include <cmath>

using namespace rsode;

namespace {

ProblemSpec example1_inputs() {
    ProblemSpec spec;
    spec.A.entries = {Distribution::point_mass(4.0), Distribution::uniform(0, 1)};
    spec.B.entries = {Distribution::gamma(2, 2).truncated(0, 4), Distribution::bernoulli(0.35)};
    spec.Y0 = Distribution::normal(2, 1);
    spec.Y1 = Distribution::poisson(2);
    return spec;
}

}  // namespace

TEST_CASE("polynomial arithmetic") {
    const auto x = SparsePolynomial::variable(2, 0);
    const auto y = SparsePolynomial::variable(2, 1);
    const auto one = SparsePolynomial::constant(2, 1.0);
    const auto p = (x + one) * (x - one);
    CHECK(p.size() == 2);
    CHECK(p.max_exponent(0) == 2);
    const std::vector<double> at{3.0, 7.0};
    CHECK(p.evaluate(at) == doctest::Approx(8.0));
    const auto q = p.times_variable(1) * 2.0;
    CHECK(q.evaluate(at) == doctest::Approx(112.0));
    CHECK((p - p).size() == 0);
    CHECK(one.is_constant());
    CHECK_THROWS_AS(SparsePolynomial(2).add_term({1}, 1.0), SpecError);

    RandomInputs inputs{{Distribution::uniform(0, 1), Distribution::bernoulli(0.5)}, {"u", "b"}};
    MomentTable table(inputs);
    CHECK(expectation(p, table) == doctest::Approx(-2.0 / 3.0));
    CHECK(expectation(x * y, table) == doctest::Approx(0.25));
}

TEST_CASE("variance of t - A0 t^2 / 2 is t^4 / 48") {
    ProblemSpec spec;
    spec.A.entries = {Distribution::uniform(0, 1)};
    spec.Y0 = Distribution::normal(0, 1);
    const auto s = symbolic_series(spec, 2, Control::S1);
    REQUIRE(s.inputs.laws.size() == 1);
    CHECK(s.inputs.labels[0] == "A_0");
    for (double t : {0.5, 1.0, 1.5}) {
        const auto [mean, var] = mean_and_variance(s, t, 0.0);
        CHECK(std::abs(mean - (t - t * t / 4.0)) < 1e-12);
        CHECK(std::abs(var - std::pow(t, 4) / 48.0) < 1e-12);
    }
}

TEST_CASE("symbolic coefficients reproduce the numeric recursion") {
    const ProblemSpec spec = example1_inputs();
    const int N0 = 8;
    for (Control which : {Control::S0, Control::S1}) {
        const auto s = symbolic_series(spec, N0, which);
        // Values for A_1, B_0, B_1 at a fixed point.
        std::vector<double> values;
        std::vector<double> a{4.0, 0.0};
        std::vector<double> b{0.0, 0.0};
        for (const auto& label : s.inputs.labels) {
            double v = 0.0;
            if (label == "A_1") a[1] = v = 0.37;
            if (label == "B_0") b[0] = v = 1.21;
            if (label == "B_1") b[1] = v = 1.0;
            values.push_back(v);
        }
        CHECK(s.inputs.labels.size() == 3);
        const auto x = recur_coefficients(a, b, which == Control::S0 ? 1.0 : 0.0, which == Control::S0 ? 0.0 : 1.0, N0);
        REQUIRE(s.coeffs.size() == x.size());
        for (std::size_t n = 0; n < x.size(); ++n) CHECK(s.coeffs[n].evaluate(values) == doctest::Approx(x[n]));
    }
}

TEST_CASE("deterministic inputs give zero variance") {
    ProblemSpec spec;
    spec.A = CoefficientModel::constants({4.0, 2.0});
    spec.B = CoefficientModel::constants({0.0, -1.0});
    spec.Y0 = Distribution::bernoulli(0.4);
    spec.Y1 = Distribution::uniform(-1, 1);
    const auto s = symbolic_series(spec, 10, Control::S0);
    CHECK(s.inputs.laws.empty());
    const auto [mean, var] = mean_and_variance(s, 0.8, 0.0);
    const auto x = recur_coefficients(std::vector<double>{4.0, 2.0}, std::vector<double>{0.0, -1.0}, 1.0, 0.0, 10);
    CHECK(mean == doctest::Approx(horner(x, 0.8)).epsilon(1e-14));
    CHECK(var == 0.0);
}

TEST_CASE("term budget") {
    const ProblemSpec spec = example1_inputs();
    CHECK_THROWS_AS((void)symbolic_series(spec, 10, Control::S0, 3), BudgetError);

    const RngStream stream(11, 0);
    const auto exact = control_moments(spec, 6, Control::S0, 1.0, stream);
    CHECK(exact.exact);
    const auto sampled = control_moments(spec, 6, Control::S0, 1.0, stream, 3, 40000);
    CHECK_FALSE(sampled.exact);
    CHECK(std::abs(sampled.mean - exact.mean) < 5.0 * std::sqrt(exact.variance / 40000));
    CHECK(sampled.variance == doctest::Approx(exact.variance).epsilon(0.05));
}
