// SPDX-License-Identifier: Apache-2.0
#include "yamabe/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "yamabe/errors.hpp"
#include "yamabe/kernels.hpp"

namespace yamabe {

GridSpec::GridSpec(int n, int m, double L) : n_(n), m_(m), L_(L) {
    if (n < 3) throw InvalidArgument("dimension below 3: n = " + std::to_string(n));
    if (m < 4) throw InvalidArgument("m below minimum 4: m = " + std::to_string(m));
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("period L must be positive");
    h_ = L / m;
    cell_volume_ = std::pow(h_, n);
    size_ = 1;
    for (int a = 0; a < n; ++a) size_ *= static_cast<std::size_t>(m);
}

double GridSpec::volume() const noexcept { return std::pow(L_, n_); }

double GridSpec::critical_exponent() const noexcept { return 2.0 * n_ / (n_ - 2.0); }

double GridSpec::conformal_constant() const noexcept { return 4.0 * (n_ - 1.0) / (n_ - 2.0); }

std::vector<int> GridSpec::multi_index(std::size_t index) const {
    std::vector<int> coords(static_cast<std::size_t>(n_));
    for (int a = n_ - 1; a >= 0; --a) {
        coords[static_cast<std::size_t>(a)] = static_cast<int>(index % static_cast<std::size_t>(m_));
        index /= static_cast<std::size_t>(m_);
    }
    return coords;
}

std::size_t GridSpec::flat_index(std::span<const int> coords) const {
    std::size_t index = 0;
    for (int c : coords) {
        const int wrapped = ((c % m_) + m_) % m_;
        index = index * static_cast<std::size_t>(m_) + static_cast<std::size_t>(wrapped);
    }
    return index;
}

double GridSpec::coordinate(std::size_t index, int axis) const {
    std::size_t stride = 1;
    for (int a = n_ - 1; a > axis; --a) stride *= static_cast<std::size_t>(m_);
    return static_cast<double>((index / stride) % static_cast<std::size_t>(m_)) * h_;
}

std::vector<double> GridSpec::position(std::size_t index) const {
    std::vector<double> x(static_cast<std::size_t>(n_));
    for (int a = n_ - 1; a >= 0; --a) {
        x[static_cast<std::size_t>(a)] =
            static_cast<double>(index % static_cast<std::size_t>(m_)) * h_;
        index /= static_cast<std::size_t>(m_);
    }
    return x;
}

ScalarField::ScalarField(const GridSpec& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw InvalidArgument("field length " + std::to_string(values_.size()) +
                              " does not match grid size " + std::to_string(grid_.size()));
    }
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw InvalidArgument("grid mismatch");
}

double integrate(const ScalarField& f) {
    return f.grid().cell_volume() * kernels::sum(f.values());
}

double integrate_product(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f.grid(), g.grid());
    return f.grid().cell_volume() * kernels::dot(f.values(), g.values());
}

double lp_norm(const ScalarField& f, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("lp_norm requires p >= 1");
    const double s = f.grid().cell_volume() * kernels::abs_pow_sum(f.values(), p);
    return std::pow(s, 1.0 / p);
}

namespace {

double wrapped_axis_delta(double d, double L) {
    d = std::fmod(std::abs(d), L);
    return std::min(d, L - d);
}

}  // namespace

double periodic_distance(const GridSpec& grid, std::size_t a, std::size_t b) {
    const auto ia = grid.multi_index(a);
    const auto ib = grid.multi_index(b);
    double s = 0.0;
    for (std::size_t k = 0; k < ia.size(); ++k) {
        const double d = wrapped_axis_delta((ia[k] - ib[k]) * grid.spacing(), grid.period());
        s += d * d;
    }
    return std::sqrt(s);
}

double periodic_distance_to(const GridSpec& grid, std::size_t a, std::span<const double> center) {
    const auto x = grid.position(a);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = wrapped_axis_delta(x[k] - center[k], grid.period());
        s += d * d;
    }
    return std::sqrt(s);
}

double smoothstep(double t) noexcept {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double cutoff_profile(double r, double r_in, double r_out) noexcept {
    return smoothstep((r - r_in) / (r_out - r_in));
}

double cutoff_profile_derivative(double r, double r_in, double r_out) noexcept {
    const double w = r_out - r_in;
    const double t = (r - r_in) / w;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 6.0 * t * (1.0 - t) / w;
}

ScalarField cutoff_eta(const GridSpec& grid, std::size_t center, double r_in, double r_out) {
    if (!(r_in > 0.0 && r_in < r_out)) throw InvalidArgument("cutoff requires 0 < r_in < r_out");
    if (!(r_out < 0.5 * grid.period())) {
        throw InvalidArgument("cutoff radius r_out must be below L/2");
    }
    ScalarField eta(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        eta[i] = cutoff_profile(periodic_distance(grid, i, center), r_in, r_out);
    }
    return eta;
}

ScalarField ball_bump(const GridSpec& grid, std::span<const double> center, double r_in,
                      double r_out) {
    if (!(r_in >= 0.0 && r_in < r_out)) throw InvalidArgument("bump requires 0 <= r_in < r_out");
    if (!(r_out < 0.5 * grid.period())) throw InvalidArgument("bump radius must be below L/2");
    ScalarField b(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        b[i] = 1.0 - cutoff_profile(periodic_distance_to(grid, i, center), r_in, r_out);
    }
    return b;
}

ScalarField well_profile(const GridSpec& grid, std::span<const double> center, double radius,
                         double depth) {
    if (!(radius > 0.0 && radius < 0.5 * grid.period())) {
        throw InvalidArgument("well radius must lie in (0, L/2)");
    }
    ScalarField s(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = periodic_distance_to(grid, i, center);
        s[i] = r < radius ? depth * (1.0 - smoothstep(r / radius)) : 0.0;
    }
    return s;
}

ScalarField random_smooth_field(const GridSpec& grid, std::uint64_t seed, int max_mode) {
    const int n = grid.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    // Enumerate modes with components in [-K, K]; one amplitude and phase per mode.
    const int side = 2 * max_mode + 1;
    std::size_t modes = 1;
    for (int a = 0; a < n; ++a) modes *= static_cast<std::size_t>(side);
    struct Mode {
        std::vector<int> k;
        double amp;
        double phi;
    };
    std::vector<Mode> table;
    table.reserve(modes);
    for (std::size_t q = 0; q < modes; ++q) {
        std::vector<int> k(static_cast<std::size_t>(n));
        std::size_t r = q;
        int norm2 = 0;
        for (int a = 0; a < n; ++a) {
            k[static_cast<std::size_t>(a)] = static_cast<int>(r % side) - max_mode;
            r /= side;
            norm2 += k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
        }
        const double amp = unit(rng) / (1.0 + norm2);
        const double phi = phase(rng);
        table.push_back({std::move(k), amp, phi});
    }

    // cos(phi + w k.x) = Re(e^{i phi} prod_a e^{i w k_a x_a}); the mode sum factors,
    // so contract one axis at a time
    const double w = 2.0 * std::numbers::pi / grid.period();
    const int m = grid.points_per_axis();
    std::vector<std::complex<double>> axis(static_cast<std::size_t>(side * m));
    for (int k = 0; k < side; ++k) {
        for (int j = 0; j < m; ++j) axis[static_cast<std::size_t>(k * m + j)] = std::polar(1.0, w * (k - max_mode) * j * grid.spacing());
    }
    // row-major, axis 0 slowest, matching the grid's flat index
    std::vector<std::complex<double>> t(modes);
    for (const auto& mode : table) {
        std::size_t q = 0;
        for (int a = 0; a < n; ++a) q = q * static_cast<std::size_t>(side) + static_cast<std::size_t>(mode.k[static_cast<std::size_t>(a)] + max_mode);
        t[q] = std::polar(mode.amp, mode.phi);
    }
    std::vector<std::size_t> dims(static_cast<std::size_t>(n), static_cast<std::size_t>(side));
    for (int a = 0; a < n; ++a) {
        std::size_t outer = 1, inner = 1;
        for (int b = 0; b < a; ++b) outer *= dims[static_cast<std::size_t>(b)];
        for (int b = a + 1; b < n; ++b) inner *= dims[static_cast<std::size_t>(b)];
        std::vector<std::complex<double>> next(outer * static_cast<std::size_t>(m) * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (int j = 0; j < m; ++j) {
                auto* dst = &next[(o * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)) * inner];
                for (int k = 0; k < side; ++k) {
                    const std::complex<double> e = axis[static_cast<std::size_t>(k * m + j)];
                    const auto* src = &t[(o * static_cast<std::size_t>(side) + static_cast<std::size_t>(k)) * inner];
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += e * src[i];
                }
            }
        }
        t = std::move(next);
        dims[static_cast<std::size_t>(a)] = static_cast<std::size_t>(m);
    }
    ScalarField f(grid);
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f[i] = t[i].real();
        peak = std::max(peak, std::abs(f[i]));
    }
    if (peak > 0.0) {
        for (double& v : f.values()) v /= peak;
    }
    return f;
}

ScalarField random_positive_weight(const GridSpec& grid, std::uint64_t seed, double amplitude) {
    ScalarField f = random_smooth_field(grid, seed);
    for (double& v : f.values()) v = std::exp(amplitude * v);
    return f;
}

}  // namespace yamabe
