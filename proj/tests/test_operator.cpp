// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "yamabe/errors.hpp"
#include "yamabe/operator.hpp"

using namespace yamabe;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}
}  // namespace

TEST_CASE("constants are eigenvectors with eigenvalue S") {
    const GridSpec g(3, 8, kTwoPi);
    const ScalarField one(g, 1.0);
    CHECK(max_abs_diff(OperatorHandle(g, Potential::flat(g)).apply(one), ScalarField(g, 0.0)) < 1e-12);
    CHECK(max_abs_diff(OperatorHandle(g, Potential::uniform(g, -1.0)).apply(one), ScalarField(g, -1.0)) < 1e-12);
}

TEST_CASE("Fourier modes against the discrete symbol") {
    // A cos(k x_a) = (c_n (4/h^2) sin^2(k h / 2) + s0) cos(k x_a)
    const GridSpec g(3, 12, kTwoPi);
    const double s0 = 0.75;
    const OperatorHandle op(g, Potential::uniform(g, s0));
    const double h = g.spacing();
    for (int k = 1; k <= 3; ++k) {
        for (int axis = 0; axis < 3; ++axis) {
            const ScalarField v = sample(g, [&](const std::vector<double>& x) { return std::cos(k * x[axis]); });
            const double lambda = 8.0 * 4.0 / (h * h) * std::pow(std::sin(0.5 * k * h), 2) + s0;
            ScalarField expect = v;
            for (double& e : expect.values()) e *= lambda;
            CHECK(max_abs_diff(op.apply(v), expect) < 1e-11);
        }
    }
}

TEST_CASE("energy forms agree and the matrix is symmetric") {
    const GridSpec g(3, 9, 3.0);
    const OperatorHandle op(g, Potential::custom(random_smooth_field(g, 17)));
    const ScalarField v = random_smooth_field(g, 18, 3);
    const ScalarField w = random_smooth_field(g, 19, 3);
    CHECK(op.energy(v) == doctest::Approx(op.gradient_energy(v)).epsilon(1e-12));
    CHECK(op.energy(v, w) == doctest::Approx(op.energy(w, v)).epsilon(1e-12));
    const auto m = op.matrix();
    CHECK((SparseRowMatrix(m.transpose()) - m).norm() == doctest::Approx(0.0));
    CHECK(op.norm_bound() >= std::abs(op.energy(v) / integrate_product(v, v)));
}

TEST_CASE("potential presets") {
    const GridSpec g(3, 16, kTwoPi);
    const Potential p = Potential::parse(g, "wells:3:0.5:-50");
    CHECK(p.regime == Potential::Regime::Wells);
    REQUIRE(p.centers.size() == 3);
    double lo = 0.0;
    for (double v : p.field.values()) lo = std::min(lo, v);
    CHECK(lo >= -50.0);
    CHECK(lo < -40.0);
    CHECK(Potential::parse(g, "constant:-1").constant == -1.0);
    CHECK(Potential::parse(g, "flat").regime == Potential::Regime::Flat);
    CHECK_THROWS_AS(Potential::parse(g, "bowl:1"), InvalidArgument);
    CHECK_THROWS_AS(Potential::parse(g, "wells:0:0.5:-1"), InvalidArgument);
    // balls of radius 2 around 2 centers on a 2 pi torus overlap
    CHECK_THROWS_AS(well_centers(g, 8, 2.0), InvalidArgument);

    const Potential s = Potential::uniform(g, 2.0).shifted(-0.5);
    CHECK(s.constant == 1.5);
    CHECK(s.field[7] == 1.5);
}

TEST_CASE("well centers are pairwise separated") {
    const GridSpec g(3, 24, kTwoPi);
    const auto c = well_centers(g, 3, kTwoPi / 8);
    for (std::size_t a = 0; a < c.size(); ++a) {
        for (std::size_t b = a + 1; b < c.size(); ++b) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                double d = std::fmod(std::abs(c[a][k] - c[b][k]), kTwoPi);
                d = std::min(d, kTwoPi - d);
                s += d * d;
            }
            CHECK(std::sqrt(s) >= 2 * kTwoPi / 8);
        }
    }
}

TEST_CASE("weights and mass") {
    const GridSpec g(3, 4, 1.0);
    CHECK_THROWS_AS(WeightField(ScalarField(g, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(WeightField(ScalarField(g, -1.0)), InvalidArgument);
    ScalarField u(g, 2.0);
    u[3] = 0.0;
    const WeightField w(u);
    CHECK_FALSE(w.strictly_positive());
    const MassDiagonal m = weight_mass(g, w);
    CHECK(m.density[0] == doctest::Approx(16.0));  // u^(N-2) = 2^4
    CHECK(m.density[3] == 0.0);
    CHECK_FALSE(m.positive_definite());
    CHECK(make_pencil(OperatorHandle(g, Potential::flat(g)), w).zero_mass_count() == 1);
}

TEST_CASE("conformal push matches its definition") {
    const GridSpec g(3, 8, kTwoPi);
    const OperatorHandle op(g, Potential::custom(random_smooth_field(g, 2)));
    const ScalarField phi = random_positive_weight(g, 4, 0.3);
    const ConformalOperator conf = conformal_push(op, phi);
    const ScalarField v = random_smooth_field(g, 5, 3);
    ScalarField pv = v;
    for (std::size_t i = 0; i < v.size(); ++i) pv[i] *= phi[i];
    const ScalarField apv = op.apply(pv);
    const ScalarField got = conf.apply(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(got[i] == doctest::Approx(apv[i] * std::pow(phi[i], -5.0)).epsilon(1e-12));
    }
    // constant factor on the flat torus keeps zero curvature
    const ScalarField s = scalar_curvature_of_conformal(OperatorHandle(g, Potential::flat(g)), ScalarField(g, 1.3));
    for (double x : s.values()) CHECK(std::abs(x) < 1e-12);
}
