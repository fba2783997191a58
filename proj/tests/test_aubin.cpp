// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "yamabe/aubin.hpp"
#include "yamabe/errors.hpp"

using namespace yamabe;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDelta = kPi / 4.0;
}  // namespace

TEST_CASE("sphere constants") {
    CHECK(unit_sphere_area(3) == doctest::Approx(4 * kPi));
    CHECK(sphere_volume(3) == doctest::Approx(2 * kPi * kPi));
    CHECK(mu_sn_constant(3) == doctest::Approx(6.0 * std::pow(2 * kPi * kPi, 2.0 / 3.0)));
    CHECK(sphere_volume(2) == doctest::Approx(4 * kPi));
}

TEST_CASE("normalization of v_eps") {
    for (double eps : {1e-1, 1e-3, 1e-6}) {
        const TestFnSpec s = build_v_eps(TestFnSpec{.n = 3, .eps = eps, .delta = kDelta, .center = {}});
        CHECK(s.c_eps > 0.0);
        CHECK(v_eps_moment(s, 6.0) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("analytic radial derivative") {
    const TestFnSpec s = build_v_eps(TestFnSpec{.n = 3, .eps = 0.01, .delta = kDelta, .center = {}});
    for (double r : {0.05, 0.3, 0.9, 1.2}) {
        const double h = 1e-6 * r;
        const double fd = (v_eps_profile(s, r + h) - v_eps_profile(s, r - h)) / (2 * h);
        CHECK(v_eps_derivative(s, r) == doctest::Approx(fd).epsilon(1e-8));
    }
    CHECK(v_eps_profile(s, 2.5 * kDelta) == 0.0);
}

TEST_CASE("predicted exponents") {
    CHECK(predicted_moment_slope(3, 2.0) == doctest::Approx(0.5));
    CHECK(predicted_moment_slope(3, 5.0) == doctest::Approx(0.25));
    CHECK(predicted_moment_slope(4, 1.0) == doctest::Approx(0.5));
    CHECK(loglog_slope({1.0, 10.0, 100.0}, {2.0, 20.0, 200.0}) == doctest::Approx(1.0));
}

TEST_CASE("scaling branches for n = 3") {
    const std::vector<double> eps{1e-6, 1e-5, 1e-4, 1e-3};
    const auto p2 = scaling_check(3, 2.0, eps, kDelta);
    const auto p5 = scaling_check(3, 5.0, eps, kDelta);
    const auto p3 = scaling_check(3, 3.0, eps, kDelta);
    CHECK(p2.verdict == "pass");
    CHECK(p2.fitted_slope == doctest::Approx(0.5).epsilon(0.1));
    CHECK(p5.verdict == "pass");
    CHECK(p3.verdict == "logarithmic");
    CHECK(p3.log_ratio_spread < 2.0);
    const auto ce = c_eps_scaling(3, {1e-4, 1e-3, 1e-2, 1e-1}, kDelta);
    CHECK(ce.verdict == "pass");
    CHECK(std::abs(ce.fitted_slope - 0.25) <= 0.02);

    std::ostringstream csv;
    write_scaling_csv(csv, {p2, ce});
    CHECK(csv.str().rfind("epsilon,p,integral,fitted_slope,predicted_slope,verdict", 0) == 0);
}

TEST_CASE("Yamabe energy of v_eps approaches the sphere constant") {
    const auto rows = y_limit_check(3, {1e-1, 1e-2, 1e-3, 1e-4}, kDelta);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].value < rows[i - 1].value);
    const double target = mu_sn_constant(3);
    CHECK(std::abs(rows.back().value - target) / target <= 0.05);
    CHECK(rows.back().value > target);
}

TEST_CASE("grid sampling agrees with the radial quadrature") {
    const GridSpec g(3, 64, 2 * kPi);
    TestFnSpec s{.n = 3, .eps = 0.05, .delta = kDelta, .center = {kPi, kPi, kPi}};
    s = build_v_eps(s);
    const ScalarField f = sample_v_eps(g, s);
    CHECK(std::pow(lp_norm(f, 6.0), 6.0) == doctest::Approx(1.0).epsilon(0.01));
}
