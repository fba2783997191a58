// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "yamabe/aubin.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/invariants.hpp"

using namespace yamabe;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SolverConfig cfg(int k) {
    SolverConfig s;
    s.k = k;
    s.tol = 1e-10;
    s.max_iter = 2000;
    return s;
}

}  // namespace

TEST_CASE("Yamabe functional closed forms") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle neg(g, Potential::uniform(g, -1.0));
    // -vol / vol^(2/N) = -vol^(2/3) = -(2 pi)^2
    CHECK(yamabe_functional(neg, ScalarField(g, 1.0)) == doctest::Approx(-kTwoPi * kTwoPi).epsilon(1e-12));
    CHECK(yamabe_functional(neg, ScalarField(g, -3.0)) == doctest::Approx(-kTwoPi * kTwoPi).epsilon(1e-12));
    CHECK(std::abs(yamabe_functional(OperatorHandle(g, Potential::flat(g)), ScalarField(g, 2.0))) < 1e-12);
    CHECK_THROWS_AS(yamabe_functional(neg, ScalarField(g, 0.0)), InvalidArgument);

    const OperatorHandle wells(g, Potential::parse(g, "wells:1:1.2:-100"));
    const ScalarField u = random_positive_weight(g, 3);
    ScalarField tu = u;
    for (double& v : tu.values()) v *= -2.5;
    CHECK(yamabe_functional(wells, tu) == doctest::Approx(yamabe_functional(wells, u)).epsilon(1e-12));
}

TEST_CASE("estimate_mu on constant potentials") {
    const GridSpec g(3, 8, kTwoPi);
    MuConfig mc;
    const auto flat = estimate_mu(OperatorHandle(g, Potential::flat(g)), mc);
    CHECK(std::abs(flat.value) <= 1e-8);

    // for S = -1 the constant is the minimizer
    const OperatorHandle neg(g, Potential::uniform(g, -1.0));
    const auto est = estimate_mu(neg, mc);
    CHECK(est.value < 0.0);
    CHECK(est.value == doctest::Approx(-kTwoPi * kTwoPi).epsilon(1e-9));
    CHECK(est.residual <= 1e-6);
    CHECK(lp_norm(est.minimizer, 6.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < est.trace.size(); ++i) CHECK(est.trace[i].objective <= est.trace[i - 1].objective);
}

TEST_CASE("sign of mu follows lambda_1") {
    const GridSpec g(3, 8, kTwoPi);
    for (const char* spec : {"flat", "constant:-1", "constant:1", "wells:2:1.2:-100"}) {
        const OperatorHandle op(g, Potential::parse(g, spec));
        const double lam = lambda_weighted(op, WeightField::constant(g), 1, cfg(1));
        const auto est = estimate_mu(op, MuConfig{});
        CHECK_MESSAGE(sign_of(est.value, 1e-8) == sign_of(lam, 1e-8), spec);
        CHECK(est.value <= yamabe_functional(op, ScalarField(g, 1.0)) + 1e-12);
    }
}

TEST_CASE("weighted eigenvalues under constant weights") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:1:1.2:-100"));
    const auto base = solve_generalized(make_pencil(op, WeightField::constant(g)), cfg(3));
    for (int i = 1; i <= 3; ++i) {
        CHECK(lambda_weighted(op, WeightField::constant(g), i, cfg(3)) ==
              doctest::Approx(base[i - 1].value).epsilon(1e-10));
        // lambda_i(t) = t^(2-N) lambda_i(1)
        CHECK(lambda_weighted(op, WeightField::constant(g, 1.3), i, cfg(3)) ==
              doctest::Approx(std::pow(1.3, -4.0) * base[i - 1].value).epsilon(1e-10));
    }
    ScalarField z(g, 1.0);
    z[0] = 0.0;
    CHECK_THROWS_AS(lambda_weighted(op, WeightField(z), 1), SingularMassError);
}

TEST_CASE("mu2 objective is scale invariant and matches the constant weight") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:1:1.2:-100"));
    const double lam2 = lambda_weighted(op, WeightField::constant(g), 2, cfg(2));
    // constant weight t: lambda_2 t^(2-N) (t^N vol)^(2/n) = lambda_2 vol^(2/3)
    const double expect = lam2 * std::pow(g.volume(), 2.0 / 3.0);
    CHECK(mu2_objective(op, WeightField::constant(g, 0.7), cfg(2)) == doctest::Approx(expect).epsilon(1e-10));
    CHECK(mu2_objective(op, WeightField::constant(g, std::pow(g.volume(), -1.0 / 6.0)), cfg(2)) ==
          doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("mu2 gradient against central differences") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:1:1.2:-100"));
    const ScalarField u = random_positive_weight(g, 21, 0.3);
    const auto pairs = solve_generalized(make_pencil(op, WeightField(u)), cfg(3));
    REQUIRE(pairs[2].value - pairs[1].value > 1e-3);
    const ScalarField grad = mu2_gradient(op, u, pairs, 1e-10);
    for (std::uint64_t s : {31u, 32u, 33u}) {
        const ScalarField d = random_smooth_field(g, s, 2);
        const double h = 1e-5;
        ScalarField a = u, b = u;
        for (std::size_t i = 0; i < u.size(); ++i) {
            a[i] += h * d[i];
            b[i] -= h * d[i];
        }
        const double fd = (mu2_objective(op, WeightField(a), cfg(3)) - mu2_objective(op, WeightField(b), cfg(3))) / (2 * h);
        CHECK(integrate_product(grad, d) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("mu2 descent stays below the sphere constant") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:1:1.2:-100"));
    Mu2Config mc;
    mc.max_iter = 5;
    const auto est = mu2_optimize(op, mc);
    CHECK(est.sphere_threshold == doctest::Approx(mu_sn_constant(3)));
    CHECK(est.estimate.value <= est.initial_value);
    for (std::size_t i = 1; i < est.estimate.trace.size(); ++i) {
        CHECK(est.estimate.trace[i].objective <= est.estimate.trace[i - 1].objective);
    }
    // lambda_2 < 0: the optimizer refuses
    const OperatorHandle two(g, Potential::parse(g, "wells:2:1.2:-100"));
    CHECK_THROWS_AS(mu2_optimize(two, mc), ConvergenceError);
}

TEST_CASE("sign invariance on a small grid") {
    const GridSpec g(3, 6, kTwoPi);
    const OperatorHandle op(g, Potential::uniform(g, -1.0));
    const auto rep = sign_invariance_experiment(op, 3, 5, 4, cfg(3));
    CHECK(rep.passed);
    CHECK(rep.sign_flips == 0);
    CHECK(rep.max_covariance_residual <= 1e-10);
    CHECK(sign_of(0.5e-9, 1e-9) == 0);
    CHECK(sign_of(-2.0, 1e-9) == -1);
}

TEST_CASE("prop51 demo decreases on the two-well fixture") {
    const GridSpec g(3, 16, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:2:1.2:-100"));
    const auto rep = demo_prop51(op, {0.1, 0.01, 0.001}, kTwoPi / 8.0, cfg(2));
    CHECK(rep.lambda2 < 0.0);
    CHECK(rep.decreasing);
    CHECK(rep.rows.back().value < -1e3);
}
