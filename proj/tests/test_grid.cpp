// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "yamabe/errors.hpp"
#include "yamabe/field_io.hpp"
#include "yamabe/grid.hpp"

using namespace yamabe;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("grid constants for n = 3") {
    const GridSpec g(3, 16, kTwoPi);
    CHECK(g.size() == 4096);
    CHECK(g.spacing() == doctest::Approx(kTwoPi / 16));
    CHECK(g.cell_volume() == doctest::Approx(std::pow(kTwoPi / 16, 3)));
    CHECK(g.critical_exponent() == 6.0);
    CHECK(g.conformal_constant() == 8.0);
    CHECK(g.volume() == doctest::Approx(std::pow(kTwoPi, 3)));
}

TEST_CASE("grid preconditions") {
    CHECK_THROWS_WITH_AS(GridSpec(3, 3, 1.0), doctest::Contains("m below minimum 4"), InvalidArgument);
    CHECK_THROWS_AS(GridSpec(2, 8, 1.0), InvalidArgument);
    CHECK_THROWS_AS(GridSpec(3, 8, 0.0), InvalidArgument);
    CHECK_THROWS_AS(ScalarField(GridSpec(3, 4, 1.0), std::vector<double>(10)), InvalidArgument);
}

TEST_CASE("flat and multi index are inverse") {
    const GridSpec g(4, 5, 1.0);
    for (std::size_t i = 0; i < g.size(); i += 7) {
        const auto c = g.multi_index(i);
        CHECK(g.flat_index(c) == i);
    }
}

TEST_CASE("periodic distance wraps around") {
    const GridSpec g(3, 8, 8.0);
    const int a[3] = {0, 0, 0};
    const int b[3] = {7, 0, 0};
    const int c[3] = {4, 4, 4};
    CHECK(periodic_distance(g, g.flat_index(a), g.flat_index(b)) == doctest::Approx(1.0));
    CHECK(periodic_distance(g, g.flat_index(a), g.flat_index(c)) == doctest::Approx(std::sqrt(48.0)));
    CHECK(periodic_distance(g, g.flat_index(c), g.flat_index(a)) ==
          periodic_distance(g, g.flat_index(a), g.flat_index(c)));
}

TEST_CASE("quadrature of constants") {
    const GridSpec g(3, 8, 2.0);
    const ScalarField f(g, 3.0);
    CHECK(integrate(f) == doctest::Approx(24.0));
    CHECK(integrate_product(f, f) == doctest::Approx(72.0));
    // ||c||_p = c vol^(1/p)
    CHECK(lp_norm(f, 6.0) == doctest::Approx(3.0 * std::pow(8.0, 1.0 / 6.0)));
    CHECK_THROWS_AS(lp_norm(f, 0.5), InvalidArgument);
}

TEST_CASE("cutoff profiles") {
    CHECK(smoothstep(-1.0) == 0.0);
    CHECK(smoothstep(2.0) == 1.0);
    CHECK(smoothstep(0.5) == 0.5);
    CHECK(cutoff_profile(0.1, 0.2, 0.4) == 0.0);
    CHECK(cutoff_profile(0.5, 0.2, 0.4) == 1.0);
    // derivative against central differences
    const double r = 0.31, h = 1e-6;
    const double fd = (cutoff_profile(r + h, 0.2, 0.4) - cutoff_profile(r - h, 0.2, 0.4)) / (2 * h);
    CHECK(cutoff_profile_derivative(r, 0.2, 0.4) == doctest::Approx(fd).epsilon(1e-8));

    const GridSpec g(3, 16, kTwoPi);
    const std::vector<double> center{1.0, 1.0, 1.0};
    const ScalarField bump = ball_bump(g, center, 0.5, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = periodic_distance_to(g, i, center);
        if (d >= 1.0) CHECK(bump[i] == 0.0);
        if (d <= 0.5) CHECK(bump[i] == 1.0);
    }
    CHECK_THROWS_AS(ball_bump(g, center, 0.5, 4.0), InvalidArgument);
}

TEST_CASE("random fields are deterministic and normalized") {
    const GridSpec g(3, 8, kTwoPi);
    const ScalarField a = random_smooth_field(g, 42);
    const ScalarField b = random_smooth_field(g, 42);
    const ScalarField c = random_smooth_field(g, 43);
    CHECK(a.data() == b.data());
    CHECK(a.data() != c.data());
    double mx = 0.0;
    for (double v : a.values()) mx = std::max(mx, std::abs(v));
    CHECK(mx == doctest::Approx(1.0));
    const ScalarField w = random_positive_weight(g, 5, 0.5);
    for (double v : w.values()) {
        CHECK(v >= std::exp(-0.5) * (1 - 1e-12));
        CHECK(v <= std::exp(0.5) * (1 + 1e-12));
    }
}

TEST_CASE("random field matches the direct mode sum") {
    // same draws, summed point by point
    const GridSpec g(3, 6, 1.7);
    const int K = 2, side = 2 * K + 1;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::vector<std::array<double, 5>> modes;
    for (int q = 0; q < side * side * side; ++q) {
        const int k0 = q % side - K, k1 = (q / side) % side - K, k2 = q / (side * side) - K;
        const double amp = unit(rng) / (1.0 + k0 * k0 + k1 * k1 + k2 * k2);
        modes.push_back({double(k0), double(k1), double(k2), amp, phase(rng)});
    }
    std::vector<double> direct(g.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.position(i);
        for (const auto& md : modes) {
            direct[i] += md[3] * std::cos(md[4] + kTwoPi / 1.7 * (md[0] * x[0] + md[1] * x[1] + md[2] * x[2]));
        }
        peak = std::max(peak, std::abs(direct[i]));
    }
    const ScalarField f = random_smooth_field(g, 77, K);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(f[i] == doctest::Approx(direct[i] / peak).epsilon(1e-12));
}

TEST_CASE("YAMF round trip and corruption") {
    const GridSpec g(3, 6, 1.5);
    const ScalarField f = random_smooth_field(g, 9);
    const auto bytes = encode_yamf(f);
    const ScalarField back = decode_yamf(bytes);
    CHECK(back.grid() == g);
    CHECK(back.data() == f.data());

    auto bad = bytes;
    bad[0] ^= 0xff;
    CHECK_THROWS_AS(decode_yamf(bad), InvalidArgument);
    auto cut = bytes;
    cut.resize(cut.size() - 8);
    CHECK_THROWS_AS(decode_yamf(cut), InvalidArgument);

    const auto path = std::filesystem::temp_directory_path() / "yamabe_test_field.yamf";
    write_yamf(path, f);
    CHECK(read_yamf(path).data() == f.data());
    std::filesystem::remove(path);
}
