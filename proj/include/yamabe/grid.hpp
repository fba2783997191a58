// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace yamabe {

/// Uniform periodic grid on the flat torus (R / L Z)^n.
class GridSpec {
public:
    /// Throws InvalidArgument for n < 3, m < 4 or L <= 0.
    GridSpec(int n, int m, double L);

    [[nodiscard]] int dim() const noexcept { return n_; }
    [[nodiscard]] int points_per_axis() const noexcept { return m_; }
    [[nodiscard]] double period() const noexcept { return L_; }
    [[nodiscard]] double spacing() const noexcept { return h_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

    /// Quadrature weight of every point, h^n.
    [[nodiscard]] double cell_volume() const noexcept { return cell_volume_; }
    /// L^n.
    [[nodiscard]] double volume() const noexcept;

    /// Critical Sobolev exponent N = 2n/(n-2).
    [[nodiscard]] double critical_exponent() const noexcept;
    /// Conformal Laplacian constant c_n = 4(n-1)/(n-2).
    [[nodiscard]] double conformal_constant() const noexcept;

    /// Per-axis integer coordinates of a flat row-major index (axis 0 slowest).
    [[nodiscard]] std::vector<int> multi_index(std::size_t index) const;
    [[nodiscard]] std::size_t flat_index(std::span<const int> coords) const;
    /// Physical coordinate of a point along one axis.
    [[nodiscard]] double coordinate(std::size_t index, int axis) const;
    [[nodiscard]] std::vector<double> position(std::size_t index) const;

    friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
        return a.n_ == b.n_ && a.m_ == b.m_ && a.L_ == b.L_;
    }

private:
    int n_;
    int m_;
    double L_;
    double h_;
    double cell_volume_;
    std::size_t size_;
};

/// Real samples of a function on a grid, row-major.
class ScalarField {
public:
    explicit ScalarField(const GridSpec& grid, double fill = 0.0);
    ScalarField(const GridSpec& grid, std::vector<double> values);

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    [[nodiscard]] bool all_finite() const noexcept;

private:
    GridSpec grid_;
    std::vector<double> values_;
};

/// Fills a field by evaluating f(position) at every grid point.
template <class F>
ScalarField sample(const GridSpec& grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.position(i));
    return out;
}

void require_same_grid(const GridSpec& a, const GridSpec& b);

/// h^n * sum of values.
double integrate(const ScalarField& f);
/// integrate(f * g).
double integrate_product(const ScalarField& f, const ScalarField& g);
/// (integrate |f|^p)^(1/p), p >= 1.
double lp_norm(const ScalarField& f, double p);

/// Flat-torus geodesic distance between two grid points.
double periodic_distance(const GridSpec& grid, std::size_t a, std::size_t b);
/// Flat-torus distance from a grid point to an arbitrary position.
double periodic_distance_to(const GridSpec& grid, std::size_t a, std::span<const double> center);

/// Smoothstep 3t^2 - 2t^3 clamped to [0, 1].
double smoothstep(double t) noexcept;
/// Radial cutoff profile: 0 for r <= r_in, 1 for r >= r_out, smoothstep in between.
double cutoff_profile(double r, double r_in, double r_out) noexcept;
double cutoff_profile_derivative(double r, double r_in, double r_out) noexcept;

/// Cutoff vanishing on the ball of radius r_in about `center`, equal to one
/// outside radius r_out. Requires 0 < r_in < r_out < L/2.
ScalarField cutoff_eta(const GridSpec& grid, std::size_t center, double r_in, double r_out);
/// 1 - cutoff_eta: a bump supported in the ball of radius r_out.
ScalarField ball_bump(const GridSpec& grid, std::span<const double> center, double r_in,
                      double r_out);
/// depth * (1 - smoothstep(r / radius)), supported in the open ball of radius `radius`.
ScalarField well_profile(const GridSpec& grid, std::span<const double> center, double radius,
                         double depth);

/// Deterministic low-pass random field: a sum of Fourier modes with |k|_inf <= max_mode
/// and amplitudes decaying like 1/(1+|k|^2), scaled to max |f| = 1.
ScalarField random_smooth_field(const GridSpec& grid, std::uint64_t seed, int max_mode = 2);
/// Strictly positive random weight exp(amplitude * random_smooth_field).
ScalarField random_positive_weight(const GridSpec& grid, std::uint64_t seed,
                                   double amplitude = 0.5);

}  // namespace yamabe
