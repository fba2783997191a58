// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "yamabe/critical.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/nodal.hpp"

using namespace yamabe;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SolverConfig cfg(int k) {
    SolverConfig s;
    s.k = k;
    s.tol = 1e-10;
    return s;
}

// v1 + 0.7 v2 plus smooth noise on the two-well fixture: sign-changing, with
// integral u L u < 0.
ScalarField generic_point(const OperatorHandle& op, std::uint64_t seed) {
    const GridSpec& g = op.grid();
    const auto pairs = solve_generalized(make_pencil(op, WeightField::constant(g)), cfg(2));
    const ScalarField noise = random_smooth_field(g, seed, 2);
    ScalarField u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = pairs[0].vector[i] + 0.7 * pairs[1].vector[i] + 0.05 * noise[i];
    return u;
}

}  // namespace

TEST_CASE("nodal check") {
    const GridSpec g(3, 8, kTwoPi);
    const ScalarField pos = random_positive_weight(g, 1);
    CHECK_FALSE(nodal_check(pos).nodal);
    CHECK(nodal_check(pos).negative_mass == 0.0);
    const ScalarField s = sample(g, [](const std::vector<double>& x) { return std::sin(x[0]); });
    const NodalCheck c = nodal_check(s);
    CHECK(c.nodal);
    CHECK(c.positive_mass == doctest::Approx(c.negative_mass).epsilon(1e-12));
    // a negative part below the tolerance does not count
    ScalarField tiny = pos;
    tiny[0] = -1e-6;
    CHECK_FALSE(nodal_check(tiny).nodal);
}

TEST_CASE("concentration fraction") {
    const GridSpec g(3, 10, 1.0);
    CHECK(concentration_fraction(ScalarField(g, 1.0)) == doctest::Approx(0.01));
    ScalarField spike(g, 0.0);
    spike[17] = 3.0;
    CHECK(concentration_fraction(spike) == doctest::Approx(1.0));
}

TEST_CASE("critical power and the constant solution of the negative equation") {
    const GridSpec g(3, 6, kTwoPi);
    ScalarField w(g, -2.0);
    CHECK(critical_power(w)[0] == doctest::Approx(-32.0));
    // S = -1: -w = -|w|^4 w is solved by w = 1
    const OperatorHandle op(g, Potential::uniform(g, -1.0));
    const CriticalSolve sol = newton_critical(op, ScalarField(g, 0.8), -1.0);
    CHECK(sol.converged);
    for (double v : sol.w.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(critical_residual(op, sol.w, -1.0) <= 1e-10);
}

TEST_CASE("I is invariant under scaling and has the stated gradient") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:2:1.2:-100"));
    const ScalarField u = generic_point(op, 3);
    ScalarField tu = u;
    for (double& v : tu.values()) v *= -3.0;
    CHECK(functional_I(op, tu) == doctest::Approx(functional_I(op, u)).epsilon(1e-12));

    // error normalized by |grad I| |d|; see the FD note in the README
    const ScalarField grad = functional_I_gradient(op, u);
    const double gn = lp_norm(grad, 2.0);
    double umax = 0.0;
    for (double v : u.values()) umax = std::max(umax, std::abs(v));
    for (std::uint64_t s = 0; s < 10; ++s) {
        const ScalarField d = random_smooth_field(g, 100 + s, 3);
        const double h = 1e-7 * umax;
        ScalarField a = u, b = u;
        for (std::size_t i = 0; i < u.size(); ++i) {
            a[i] += h * d[i];
            b[i] -= h * d[i];
        }
        const double fd = (functional_I(op, a) - functional_I(op, b)) / (2 * h);
        CHECK(std::abs(fd - integrate_product(grad, d)) / (gn * lp_norm(d, 2.0)) <= 1e-5);
    }
}

TEST_CASE("I rejects zero energy and alpha prime formula") {
    const GridSpec g(3, 6, kTwoPi);
    const OperatorHandle flat(g, Potential::flat(g));
    CHECK_THROWS_AS(functional_I(flat, ScalarField(g, 1.0)), InvalidArgument);
    CHECK(alpha_prime(32.0, 3) == doctest::Approx(-std::pow(32.0, 0.6)));
}

TEST_CASE("dual field inverts the critical power") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:2:1.2:-100"));
    const ScalarField u = generic_point(op, 4);
    const ScalarField v = dual_field(op, u);
    const ScalarField lu = op.apply(u);
    const ScalarField back = critical_power(v);  // |v|^4 v = Lu
    double scale = 0.0;
    for (double x : lu.values()) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(back[i] - lu[i]) <= 1e-12 * scale);
}

TEST_CASE("negative branch refuses lambda_1 >= 0") {
    const GridSpec g(3, 6, kTwoPi);
    CHECK_THROWS(minimize_I(OperatorHandle(g, Potential::uniform(g, 1.0))));
}

TEST_CASE("zero branch on a coarse two-well grid") {
    const GridSpec g(3, 8, kTwoPi);
    const ZeroTuning z = lambda2_zero_tuning(g, Potential::parse(g, "wells:2:1.2:-100"), 1e-8, cfg(3));
    CHECK(std::abs(z.lambda2_tuned) <= 1e-8);
    CHECK(z.shift == doctest::Approx(-z.lambda2_base));
    CHECK(z.kernel.basis.size() == 1);
    CHECK(z.solution.eps_sign == 0);
    CHECK(z.solution.nodal);
}
