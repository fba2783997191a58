// SPDX-License-Identifier: Apache-2.0
#include "yamabe/operator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "yamabe/errors.hpp"
#include "yamabe/field_io.hpp"
#include "yamabe/kernels.hpp"

namespace yamabe {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("cannot parse " + what + " from '" + s + "'");
    }
}

kernels::StencilSpec stencil_of(const GridSpec& grid) {
    const double h = grid.spacing();
    return {grid.dim(), grid.points_per_axis(), grid.conformal_constant() / (h * h)};
}

}  // namespace

// --- Potential --------------------------------------------------------------

Potential Potential::flat(const GridSpec& grid) {
    Potential p(ScalarField(grid, 0.0), Regime::Flat);
    return p;
}

Potential Potential::uniform(const GridSpec& grid, double s0) {
    if (!std::isfinite(s0)) throw InvalidArgument("constant potential must be finite");
    Potential p(ScalarField(grid, s0), Regime::Constant);
    p.constant = s0;
    return p;
}

Potential Potential::wells(const GridSpec& grid, int k, double radius, double depth) {
    if (!std::isfinite(depth)) throw InvalidArgument("well depth must be finite");
    Potential p(ScalarField(grid, 0.0), Regime::Wells);
    p.centers = well_centers(grid, k, radius);
    p.well_radius = radius;
    p.well_depth = depth;
    for (const auto& c : p.centers) {
        const ScalarField w = well_profile(grid, c, radius, depth);
        for (std::size_t i = 0; i < grid.size(); ++i) p.field[i] += w[i];
    }
    return p;
}

Potential Potential::custom(ScalarField field) {
    if (!field.all_finite()) throw InvalidArgument("potential must be finite everywhere");
    Potential p(std::move(field));
    return p;
}

Potential Potential::parse(const GridSpec& grid, const std::string& spec) {
    if (spec == "flat") return flat(grid);
    const auto parts = split(spec, ':');
    if (parts.empty()) throw InvalidArgument("empty potential spec");
    if (parts[0] == "constant" && parts.size() == 2) {
        return uniform(grid, parse_double(parts[1], "constant potential"));
    }
    if (parts[0] == "wells" && parts.size() == 4) {
        const double k = parse_double(parts[1], "well count");
        if (k < 1 || k != std::floor(k)) throw InvalidArgument("well count must be a positive integer");
        return wells(grid, static_cast<int>(k), parse_double(parts[2], "well radius"),
                     parse_double(parts[3], "well depth"));
    }
    if (parts[0] == "file" && parts.size() >= 2) {
        const std::string path = spec.substr(5);
        ScalarField f = read_yamf(path);
        require_same_grid(f.grid(), grid);
        return custom(std::move(f));
    }
    throw InvalidArgument("unknown potential spec '" + spec + "'");
}

Potential Potential::shifted(double c) const {
    Potential p = *this;
    for (double& v : p.field.values()) v += c;
    if (regime == Regime::Flat || regime == Regime::Constant) {
        p.regime = Regime::Constant;
        p.constant = constant + c;
    } else {
        p.regime = Regime::Custom;
    }
    return p;
}

std::vector<std::vector<double>> well_centers(const GridSpec& grid, int k, double radius) {
    if (k < 1) throw InvalidArgument("well count must be at least 1");
    const double L = grid.period();
    if (!(radius > 0.0 && radius < 0.5 * L)) throw InvalidArgument("well radius must lie in (0, L/2)");
    const int n = grid.dim();
    int q = 1;
    while (std::pow(static_cast<double>(q), n) < k) ++q;
    const double cell = L / q;
    if (q > 1 && cell < 2.0 * radius) {
        throw InvalidArgument("cannot place " + std::to_string(k) +
                              " disjoint wells of radius " + std::to_string(radius));
    }
    std::vector<std::vector<double>> centers;
    for (int j = 0; j < k; ++j) {
        std::vector<double> c(static_cast<std::size_t>(n));
        int r = j;
        for (int a = n - 1; a >= 0; --a) {
            c[static_cast<std::size_t>(a)] = (static_cast<double>(r % q) + 0.5) * cell;
            r /= q;
        }
        centers.push_back(std::move(c));
    }
    return centers;
}

// --- Weights ----------------------------------------------------------------

WeightField::WeightField(ScalarField u) : u_(std::move(u)) {
    bool any_positive = false;
    strictly_positive_ = true;
    for (double v : u_.values()) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("weight must be finite and non-negative");
        any_positive = any_positive || v > 0.0;
        strictly_positive_ = strictly_positive_ && v > 0.0;
    }
    if (!any_positive) throw InvalidArgument("weight must not vanish identically");
}

WeightField WeightField::constant(const GridSpec& grid, double t) {
    return WeightField(ScalarField(grid, t));
}

bool MassDiagonal::positive_definite() const {
    return std::all_of(density.begin(), density.end(), [](double d) { return d > 0.0; });
}

MassDiagonal weight_mass(const GridSpec& grid, const WeightField& u) {
    require_same_grid(grid, u.grid());
    const double power = grid.critical_exponent() - 2.0;
    MassDiagonal m;
    m.cell_volume = grid.cell_volume();
    m.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ui = u.field()[i];
        m.density[i] = ui == 0.0 ? 0.0 : std::pow(ui, power);
    }
    return m;
}

// --- OperatorHandle ---------------------------------------------------------

OperatorHandle::OperatorHandle(const GridSpec& grid, Potential potential)
    : grid_(grid), potential_(std::move(potential)) {
    require_same_grid(grid_, potential_.grid());
    if (!potential_.field.all_finite()) throw InvalidArgument("potential must be finite everywhere");
}

double OperatorHandle::stencil_scale() const noexcept {
    const double h = grid_.spacing();
    return grid_.conformal_constant() / (h * h);
}

void OperatorHandle::apply(std::span<const double> v, std::span<double> out) const {
    kernels::stencil_apply(stencil_of(grid_), potential_.field.values(), v, out);
}

ScalarField OperatorHandle::apply(const ScalarField& v) const {
    require_same_grid(grid_, v.grid());
    ScalarField out(grid_);
    apply(v.values(), out.values());
    return out;
}

double OperatorHandle::energy(const ScalarField& v, const ScalarField& w) const {
    return integrate_product(apply(v), w);
}

double OperatorHandle::energy(const ScalarField& v) const { return energy(v, v); }

double OperatorHandle::gradient_energy(const ScalarField& v) const {
    require_same_grid(grid_, v.grid());
    return grid_.cell_volume() *
           kernels::stencil_energy(stencil_of(grid_), potential_.field.values(), v.values());
}

SparseRowMatrix OperatorHandle::matrix() const {
    const std::size_t size = grid_.size();
    const int n = grid_.dim();
    const auto m = static_cast<std::size_t>(grid_.points_per_axis());
    const double scale = stencil_scale();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(size * static_cast<std::size_t>(2 * n + 1));
    for (std::size_t i = 0; i < size; ++i) {
        entries.emplace_back(static_cast<int>(i), static_cast<int>(i),
                             2.0 * n * scale + potential_.field[i]);
        std::size_t stride = 1;
        for (int a = n - 1; a >= 0; --a) {
            const std::size_t coord = (i / stride) % m;
            const std::size_t up = coord + 1 < m ? i + stride : i - (m - 1) * stride;
            const std::size_t down = coord > 0 ? i - stride : i + (m - 1) * stride;
            entries.emplace_back(static_cast<int>(i), static_cast<int>(up), -scale);
            entries.emplace_back(static_cast<int>(i), static_cast<int>(down), -scale);
            stride *= m;
        }
    }
    SparseRowMatrix a(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();
    return a;
}

double OperatorHandle::norm_bound() const {
    const double scale = stencil_scale();
    double bound = 0.0;
    for (double s : potential_.field.values()) {
        bound = std::max(bound, std::abs(2.0 * grid_.dim() * scale + s) + 2.0 * grid_.dim() * scale);
    }
    return bound;
}

OperatorHandle assemble_operator(const GridSpec& grid, Potential potential) {
    return OperatorHandle(grid, std::move(potential));
}

double energy(const OperatorHandle& op, const ScalarField& v) { return op.energy(v); }

// --- Conformal change -------------------------------------------------------

ConformalOperator::ConformalOperator(const OperatorHandle& base, ScalarField phi)
    : base_(base), phi_(std::move(phi)), weights_(base.grid()) {
    require_same_grid(base_.grid(), phi_.grid());
    const double N = base_.grid().critical_exponent();
    const double dv = base_.grid().cell_volume();
    for (std::size_t i = 0; i < phi_.size(); ++i) {
        if (!(phi_[i] > 0.0) || !std::isfinite(phi_[i])) {
            throw InvalidArgument("conformal factor must be strictly positive");
        }
        weights_[i] = std::pow(phi_[i], N) * dv;
    }
}

ScalarField ConformalOperator::apply(const ScalarField& v) const {
    const double N = base_.grid().critical_exponent();
    ScalarField pv(v.grid());
    for (std::size_t i = 0; i < v.size(); ++i) pv[i] = phi_[i] * v[i];
    ScalarField out = base_.apply(pv);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] *= std::pow(phi_[i], 1.0 - N);
    return out;
}

double ConformalOperator::integrate(const ScalarField& f) const {
    return kernels::dot(weights_.values(), f.values());
}

ConformalOperator conformal_push(const OperatorHandle& op, const ScalarField& phi) {
    return ConformalOperator(op, phi);
}

ScalarField scalar_curvature_of_conformal(const OperatorHandle& op_flat, const ScalarField& phi) {
    const auto& s = op_flat.potential().field.values();
    if (std::any_of(s.begin(), s.end(), [](double v) { return v != 0.0; })) {
        throw InvalidArgument("scalar_curvature_of_conformal needs a flat operator (S == 0)");
    }
    for (double p : phi.values()) {
        if (!(p > 0.0)) throw InvalidArgument("conformal factor must be strictly positive");
    }
    const double N = op_flat.grid().critical_exponent();
    ScalarField out = op_flat.apply(phi);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= std::pow(phi[i], N - 1.0);
    return out;
}

// --- Pencils ----------------------------------------------------------------

std::size_t Pencil::zero_mass_count() const {
    return static_cast<std::size_t>(std::count(mass.begin(), mass.end(), 0.0));
}

Pencil make_pencil(const OperatorHandle& op, const WeightField& u) {
    MassDiagonal m = weight_mass(op.grid(), u);
    return Pencil{op.grid(), op.matrix(), std::move(m.density), op.grid().cell_volume()};
}

Pencil make_conformal_pencil(const ConformalOperator& conf, const WeightField& u) {
    const GridSpec& grid = conf.base().grid();
    const double N = grid.critical_exponent();
    MassDiagonal m = weight_mass(grid, u);
    const ScalarField& phi = conf.factor();
    SparseRowMatrix k = conf.base().matrix();
    for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(k, r); it; ++it) {
            it.valueRef() *= phi[static_cast<std::size_t>(it.row())] *
                             phi[static_cast<std::size_t>(it.col())];
        }
    }
    for (std::size_t i = 0; i < m.density.size(); ++i) m.density[i] *= std::pow(phi[i], N);
    return Pencil{grid, std::move(k), std::move(m.density), grid.cell_volume()};
}

}  // namespace yamabe
