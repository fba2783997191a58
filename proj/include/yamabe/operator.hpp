// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "yamabe/grid.hpp"

namespace yamabe {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Prescribed scalar-curvature field S together with how it was built.
struct Potential {
    enum class Regime { Flat, Constant, Wells, Custom };

    explicit Potential(ScalarField f, Regime r = Regime::Custom)
        : field(std::move(f)), regime(r) {}

    ScalarField field;
    Regime regime = Regime::Custom;
    double constant = 0.0;                      // Constant regime
    std::vector<std::vector<double>> centers;   // Wells regime
    double well_radius = 0.0;
    double well_depth = 0.0;

    static Potential flat(const GridSpec& grid);
    static Potential uniform(const GridSpec& grid, double s0);
    /// k disjoint wells of the given radius and depth at `well_centers(grid, k, radius)`.
    static Potential wells(const GridSpec& grid, int k, double radius, double depth);
    static Potential custom(ScalarField field);

    /// "flat" | "constant:<s0>" | "wells:<k>:<radius>:<depth>" | "file:<path.yamf>".
    static Potential parse(const GridSpec& grid, const std::string& spec);

    /// Same potential shifted by a constant; the regime tag is kept where meaningful.
    [[nodiscard]] Potential shifted(double c) const;
    [[nodiscard]] const GridSpec& grid() const noexcept { return field.grid(); }
};

/// Deterministic placement of k well centers at the centers of a q^n cell
/// lattice, q = ceil(k^(1/n)). Throws if neighbouring balls of `radius`
/// would not be disjoint (center separation below 2 * radius).
std::vector<std::vector<double>> well_centers(const GridSpec& grid, int k, double radius);

/// Non-negative conformal weight u, not identically zero.
class WeightField {
public:
    explicit WeightField(ScalarField u);
    static WeightField constant(const GridSpec& grid, double t = 1.0);

    [[nodiscard]] const ScalarField& field() const noexcept { return u_; }
    [[nodiscard]] bool strictly_positive() const noexcept { return strictly_positive_; }
    [[nodiscard]] const GridSpec& grid() const noexcept { return u_.grid(); }

private:
    ScalarField u_;
    bool strictly_positive_ = false;
};

/// Diagonal weighted mass: entries density_i * cell_volume with density = u^(N-2).
struct MassDiagonal {
    std::vector<double> density;
    double cell_volume = 1.0;

    [[nodiscard]] double entry(std::size_t i) const { return density[i] * cell_volume; }
    [[nodiscard]] bool positive_definite() const;
};

MassDiagonal weight_mass(const GridSpec& grid, const WeightField& u);

/// Discrete Yamabe operator c_n * Delta_h + S with Delta_h >= 0 the periodic
/// (2n+1)-point Laplacian. Immutable; apply/energy are safe for concurrent use.
class OperatorHandle {
public:
    OperatorHandle(const GridSpec& grid, Potential potential);

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const Potential& potential() const noexcept { return potential_; }
    [[nodiscard]] double stencil_scale() const noexcept;

    void apply(std::span<const double> v, std::span<double> out) const;
    [[nodiscard]] ScalarField apply(const ScalarField& v) const;

    /// integrate(w * apply(v)).
    [[nodiscard]] double energy(const ScalarField& v, const ScalarField& w) const;
    [[nodiscard]] double energy(const ScalarField& v) const;
    /// Same quadratic form summed as integral(c_n |grad_h v|^2 + S v^2) over
    /// forward differences; accurate when v is nearly constant.
    [[nodiscard]] double gradient_energy(const ScalarField& v) const;

    /// Explicit symmetric matrix of apply (no quadrature factor).
    [[nodiscard]] SparseRowMatrix matrix() const;
    /// Upper bound for ||apply||_2 by the Gershgorin row sums.
    [[nodiscard]] double norm_bound() const;

private:
    GridSpec grid_;
    Potential potential_;
};

OperatorHandle assemble_operator(const GridSpec& grid, Potential potential);

double energy(const OperatorHandle& op, const ScalarField& v);

/// Operator of the conformal metric phi^(N-2) g: v -> phi^(1-N) apply(phi v),
/// with quadrature weights phi^N h^n.
class ConformalOperator {
public:
    ConformalOperator(const OperatorHandle& base, ScalarField phi);

    [[nodiscard]] const OperatorHandle& base() const noexcept { return base_; }
    [[nodiscard]] const ScalarField& factor() const noexcept { return phi_; }
    [[nodiscard]] ScalarField apply(const ScalarField& v) const;
    /// Per-point quadrature weights of the conformal volume.
    [[nodiscard]] const ScalarField& volume_weights() const noexcept { return weights_; }
    /// integrate over the conformal volume.
    [[nodiscard]] double integrate(const ScalarField& f) const;

private:
    OperatorHandle base_;
    ScalarField phi_;
    ScalarField weights_;
};

ConformalOperator conformal_push(const OperatorHandle& op, const ScalarField& phi);

/// Scalar curvature apply(phi) / phi^(N-1) of phi^(N-2) g_flat; needs S == 0.
ScalarField scalar_curvature_of_conformal(const OperatorHandle& op_flat, const ScalarField& phi);

/// Symmetric pencil (K, M) for the quotient x'Kx / x'Mx on grid values.
/// K is the stiffness matrix (no quadrature factor), M the diagonal mass
/// density; energies carry the factor cell_volume.
struct Pencil {
    GridSpec grid;
    SparseRowMatrix stiffness;
    std::vector<double> mass;
    double cell_volume = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return mass.size(); }
    /// Number of mass entries that are exactly zero.
    [[nodiscard]] std::size_t zero_mass_count() const;
};

/// Pencil of (c_n Delta + S, u^(N-2) dv).
Pencil make_pencil(const OperatorHandle& op, const WeightField& u);
/// Pencil of the conformal side: stiffness Phi A Phi, mass u^(N-2) phi^N, i.e.
/// the quotient integral(v * conformal apply(v)) / integral(u^(N-2) v^2) over the
/// conformal volume.
Pencil make_conformal_pencil(const ConformalOperator& conf, const WeightField& u);

}  // namespace yamabe
