// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "yamabe/errors.hpp"
#include "yamabe/spectral.hpp"

using namespace yamabe;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SolverConfig cfg(int k, double tol = 1e-10) {
    SolverConfig s;
    s.k = k;
    s.tol = tol;
    s.max_iter = 2000;
    return s;
}

// Closed-form spectrum of the (2n+1)-point stencil: c_n sum_a (4/h^2) sin^2(pi k_a / m) + s0.
std::vector<double> fourier_spectrum(const GridSpec& g, double s0, std::size_t count) {
    std::vector<double> out;
    const int m = g.points_per_axis();
    const double h = g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto k = g.multi_index(i);
        double s = 0.0;
        for (int a : k) s += 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * a / m), 2);
        out.push_back(g.conformal_constant() * s + s0);
    }
    std::sort(out.begin(), out.end());
    out.resize(count);
    return out;
}

Pencil random_pencil(const GridSpec& g, std::uint64_t seed) {
    ScalarField s = random_smooth_field(g, seed, 2);
    for (double& v : s.values()) v *= 5.0;
    return make_pencil(OperatorHandle(g, Potential::custom(s)), WeightField(random_positive_weight(g, seed + 50)));
}

}  // namespace

TEST_CASE("flat torus spectrum matches the Fourier oracle") {
    for (int m : {8, 16}) {
        const GridSpec g(3, m, kTwoPi);
        const auto pairs = solve_generalized(make_pencil(OperatorHandle(g, Potential::flat(g)),
                                                         WeightField::constant(g)),
                                             cfg(7));
        const auto oracle = fourier_spectrum(g, 0.0, 7);
        CHECK(std::abs(pairs[0].value) <= 1e-9);
        for (int i = 1; i < 7; ++i) CHECK(pairs[i].value == doctest::Approx(oracle[i]).epsilon(1e-9));
        for (const auto& p : pairs) CHECK(p.residual <= 1e-10);
    }
}

TEST_CASE("constant potential shifts every eigenvalue") {
    const GridSpec g(3, 8, kTwoPi);
    const auto base = solve_generalized(make_pencil(OperatorHandle(g, Potential::flat(g)), WeightField::constant(g)), cfg(8));
    const auto shifted =
        solve_generalized(make_pencil(OperatorHandle(g, Potential::uniform(g, -1.0)), WeightField::constant(g)), cfg(8));
    CHECK(shifted[0].value == doctest::Approx(-1.0).epsilon(1e-12));
    for (int i = 0; i < 8; ++i) CHECK(shifted[i].value - base[i].value == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("iterative solve against the dense oracle") {
    const GridSpec g(3, 8, kTwoPi);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Pencil p = random_pencil(g, seed);
        SolverConfig c = cfg(6);
        c.dense_threshold = 0;
        const auto it = solve_generalized(p, c);
        const auto dn = solve_dense(p, 6);
        for (int i = 0; i < 6; ++i) CHECK(it[i].value == doctest::Approx(dn[i].value).epsilon(1e-7));
        const auto gram = mass_gram(p, it);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) CHECK(std::abs(gram[i][j] - (i == j)) <= 1e-10);
        }
    }
}

TEST_CASE("the solver is deterministic for a fixed seed") {
    const GridSpec g(3, 12, kTwoPi);
    const Pencil p = random_pencil(g, 4);
    SolverConfig c = cfg(4);
    c.dense_threshold = 0;
    c.seed = 11;
    const auto a = solve_generalized(p, c);
    const auto b = solve_generalized(p, c);
    for (int i = 0; i < 4; ++i) {
        CHECK(a[i].value == b[i].value);
        CHECK(a[i].vector.data() == b[i].vector.data());
    }
}

TEST_CASE("Rayleigh quotient identities") {
    const GridSpec g(3, 8, kTwoPi);
    const Pencil p = random_pencil(g, 5);
    const auto pairs = solve_generalized(p, cfg(3));
    CHECK(rayleigh_quotient(p, pairs[1].vector) == doctest::Approx(pairs[1].value).epsilon(1e-10));
    ScalarField sum = pairs[0].vector;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pairs[1].vector[i];
    CHECK(rayleigh_quotient(p, sum) == doctest::Approx(0.5 * (pairs[0].value + pairs[1].value)).epsilon(1e-10));

    const Pencil flat = make_pencil(OperatorHandle(g, Potential::flat(g)), WeightField::constant(g));
    CHECK(std::abs(rayleigh_quotient(flat, ScalarField(g, 1.0))) < 1e-12);
}

TEST_CASE("weight scaling covariance") {
    // u -> t u scales the mass by t^(N-2) and every eigenvalue by t^(2-N)
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::parse(g, "wells:2:1.2:-100"));
    const ScalarField u = random_positive_weight(g, 8);
    ScalarField tu = u;
    const double t = 1.7;
    for (double& v : tu.values()) v *= t;
    const auto a = solve_generalized(make_pencil(op, WeightField(u)), cfg(4));
    const auto b = solve_generalized(make_pencil(op, WeightField(tu)), cfg(4));
    for (int i = 0; i < 4; ++i) CHECK(b[i].value == doctest::Approx(a[i].value * std::pow(t, -4.0)).epsilon(1e-9));
}

TEST_CASE("min-max certificate") {
    const GridSpec g(3, 8, kTwoPi);
    const Pencil p = random_pencil(g, 6);
    auto pairs = solve_generalized(p, cfg(3));
    const MinmaxReport ok = minmax_certificate(p, pairs, 100, 1);
    CHECK(ok.passed);
    CHECK(ok.span_margin[0] <= 1e-9);
    CHECK(ok.violations == 0);
    for (double m : ok.trial_margin) CHECK(m >= -1e-9);

    // a wrong second vector is caught by the span check
    for (std::size_t q = 0; q < pairs[1].vector.size(); ++q) pairs[1].vector[q] += 0.1 * pairs[2].vector[q];
    const MinmaxReport bad = minmax_certificate(p, pairs, 10, 1);
    CHECK_FALSE(bad.span_ok);
    CHECK(bad.span_margin[1] > 1e-6);
}

TEST_CASE("kernel detection") {
    const GridSpec g(3, 8, kTwoPi);
    CHECK(detect_kernel(OperatorHandle(g, Potential::uniform(g, -1.0))).basis.empty());
    const KernelBasis k = detect_kernel(OperatorHandle(g, Potential::flat(g)));
    REQUIRE(k.basis.size() == 1);
    const auto& v = k.basis[0].values();
    for (double x : v) CHECK(x == doctest::Approx(v[0]).epsilon(1e-8));
    CHECK(integrate_product(k.basis[0], k.basis[0]) == doctest::Approx(1.0));
    CHECK_FALSE(k.ambiguous);
}

TEST_CASE("degenerate weights") {
    const GridSpec g(3, 16, kTwoPi);
    const Potential wells = Potential::wells(g, 1, 1.2, -50.0);
    const OperatorHandle op(g, wells);
    std::vector<double> far = wells.centers[0];
    for (double& x : far) x = std::fmod(x + std::numbers::pi, kTwoPi);
    const ScalarField bump = ball_bump(g, far, 0.6, 1.2);
    const Pencil p = make_pencil(op, WeightField(bump));

    CHECK_THROWS_AS(solve_generalized(p, cfg(2)), SingularMassError);

    const NegInfCertificate cert = neg_inf_certificate(p);
    REQUIRE(cert.found);
    CHECK(cert.energy < 0.0);
    CHECK(cert.zero_set_size == p.zero_mass_count());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.mass[i] > 0.0) CHECK(cert.direction[i] == 0.0);
    }

    // R(w + a) ~ E(w) / (a^2 integral u^(N-2)): halving a quadruples R once the a^-2 term dominates
    const std::vector<double> alphas{1.0, 1e-5, 5e-6};
    const auto seq = divergence_sequence(p, cert.direction, alphas);
    CHECK(std::isfinite(seq[0]));
    CHECK(seq[2] / seq[1] == doctest::Approx(4.0).epsilon(1e-2));
    CHECK(divergence_sequence(p, cert.direction, std::vector<double>{1e-4})[0] < -1e6);
    CHECK(seq[1] < seq[0]);
    CHECK(seq[2] < seq[1]);

    // flat form is nonnegative, so no witness
    CHECK_FALSE(neg_inf_certificate(make_pencil(OperatorHandle(g, Potential::flat(g)), WeightField(bump))).found);
    // positive weight: empty zero set
    const NegInfCertificate none = neg_inf_certificate(make_pencil(op, WeightField::constant(g)));
    CHECK_FALSE(none.found);
    CHECK(none.zero_set_size == 0);
}
