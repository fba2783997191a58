// SPDX-License-Identifier: Apache-2.0
#include "yamabe/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "yamabe/errors.hpp"
#include "yamabe/fourier.hpp"
#include "yamabe/kernels.hpp"

namespace yamabe {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ColSparse = Eigen::SparseMatrix<double>;

kernels::CsrView csr_view(const SparseRowMatrix& k) {
    const auto rows = static_cast<std::size_t>(k.rows());
    const auto nnz = static_cast<std::size_t>(k.nonZeros());
    return {std::span<const int>(k.outerIndexPtr(), rows + 1),
            std::span<const int>(k.innerIndexPtr(), nnz),
            std::span<const double>(k.valuePtr(), nnz)};
}

MatrixXd multiply(const SparseRowMatrix& k, const MatrixXd& x) {
    MatrixXd y(x.rows(), x.cols());
    const auto view = csr_view(k);
    const auto rows = static_cast<std::size_t>(x.rows());
    for (Index j = 0; j < x.cols(); ++j) {
        kernels::csr_matvec(view, std::span<const double>(x.col(j).data(), rows),
                            std::span<double>(y.col(j).data(), rows));
    }
    return y;
}

// Mass-orthonormal basis of span(s) by eigen-decomposition of the scaled Gram
// matrix; directions with relative Gram eigenvalue below `drop` are removed.
MatrixXd svqb(const VectorXd& mass, const MatrixXd& s, double drop = 1e-12) {
    MatrixXd g = s.transpose() * mass.asDiagonal() * s;
    g = 0.5 * (g + g.transpose()).eval();
    VectorXd dinv(g.rows());
    for (Index i = 0; i < g.rows(); ++i) {
        dinv(i) = g(i, i) > 0.0 ? 1.0 / std::sqrt(g(i, i)) : 0.0;
    }
    const MatrixXd gs = dinv.asDiagonal() * g * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gs);
    const VectorXd& ev = es.eigenvalues();
    const double top = ev.size() ? ev.maxCoeff() : 0.0;
    std::vector<Index> keep;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > drop * top) keep.push_back(i);
    }
    MatrixXd t(g.rows(), static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        t.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(ev(keep[c]));
    }
    return s * (dinv.asDiagonal() * t);
}

MatrixXd mass_orthonormalize(const VectorXd& mass, const MatrixXd& s) {
    return svqb(mass, svqb(mass, s));
}

// Sign convention: the sum of entries is non-negative, ties broken by the
// first nonzero entry.
void fix_sign(Eigen::Ref<VectorXd> v) {
    double s = v.sum();
    if (std::abs(s) < 1e-12 * v.cwiseAbs().sum()) {
        for (Index i = 0; i < v.size(); ++i) {
            if (v(i) != 0.0) {
                s = v(i);
                break;
            }
        }
    }
    if (s < 0.0) v = -v;
}

struct RawEigen {
    VectorXd values;
    MatrixXd vectors;  // columns satisfy x' M x = 1
    VectorXd residuals;
    int iterations = 0;
};

VectorXd residual_norms(const SparseRowMatrix& k, const VectorXd& mass, const MatrixXd& x,
                        const VectorXd& values, double norm_k) {
    const MatrixXd kx = multiply(k, x);
    VectorXd res(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const VectorXd r = kx.col(j) - values(j) * mass.cwiseProduct(x.col(j));
        res(j) = r.norm() / (norm_k * x.col(j).norm());
    }
    return res;
}

RawEigen dense_raw(const SparseRowMatrix& k, const VectorXd& mass, int count) {
    const Index n = k.rows();
    const VectorXd isq = mass.cwiseSqrt().cwiseInverse();
    MatrixXd c = MatrixXd(k);
    c = isq.asDiagonal() * c * isq.asDiagonal();
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
    const Index take = std::min<Index>(count, n);
    RawEigen out;
    out.values = es.eigenvalues().head(take);
    out.vectors = isq.asDiagonal() * es.eigenvectors().leftCols(take);
    for (Index j = 0; j < take; ++j) fix_sign(out.vectors.col(j));
    out.residuals = residual_norms(k, mass, out.vectors, out.values, norm_estimate(k));
    return out;
}

class ShiftedFactor {
public:
    // True when K - sigma M factors with only positive pivots (sigma below the spectrum).
    bool factor(const SparseRowMatrix& k, const VectorXd& mass, double sigma) {
        ColSparse a = ColSparse(k);
        for (Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= sigma * mass(i);
        ldlt_.compute(a);
        if (ldlt_.info() != Eigen::Success) return false;
        const VectorXd d = ldlt_.vectorD();
        shift_ = sigma;
        return (d.array() > 0.0).all();
    }
    [[nodiscard]] MatrixXd solve(const MatrixXd& r) const { return ldlt_.solve(r); }
    [[nodiscard]] double shift() const { return shift_; }

private:
    Eigen::SimplicialLDLT<ColSparse> ldlt_;
    double shift_ = 0.0;
};

// Lower bound of the pencil spectrum by Gershgorin discs of M^-1/2 K M^-1/2.
double gershgorin_lower(const SparseRowMatrix& k, const VectorXd& mass) {
    double lb = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < k.outerSize(); ++r) {
        double diag = 0.0;
        double off = 0.0;
        for (SparseRowMatrix::InnerIterator it(k, r); it; ++it) {
            if (it.col() == r) {
                diag = it.value();
            } else {
                off += std::abs(it.value()) / std::sqrt(mass(it.col()));
            }
        }
        lb = std::min(lb, diag / mass(r) - off / std::sqrt(mass(r)));
    }
    return lb;
}

// Places the preconditioner shift just below `upper` when the inertia test
// allows it, otherwise strictly below the Gershgorin bound.
void place_shift(ShiftedFactor& pre, const SparseRowMatrix& k, const VectorXd& mass,
                 double upper, double gap, double lower) {
    const double sigma = upper - gap;
    if (sigma > lower && pre.factor(k, mass, sigma)) return;
    if (pre.factor(k, mass, lower - 1e-3 * (std::abs(lower) + 1.0))) return;
    throw ConvergenceError("could not place a positive definite preconditioner shift");
}

// Preconditioner for large periodic pencils: (c Delta_h + tau)^-1 by FFT, with
// tau the mean of the diagonal part of K - sigma M.
class FourierPreconditioner {
public:
    FourierPreconditioner(const GridSpec& grid, const SparseRowMatrix& k, const VectorXd& mass)
        : solver_(grid, grid.conformal_constant() / (grid.spacing() * grid.spacing())),
          mass_(mass), potential_(k.rows()) {
        const double h = grid.spacing();
        const double stencil_diag = 2.0 * grid.dim() * grid.conformal_constant() / (h * h);
        for (Index i = 0; i < k.rows(); ++i) potential_(i) = k.coeff(i, i) - stencil_diag;
        floor_ = 0.1 * grid.conformal_constant() * std::pow(2.0 * std::numbers::pi / grid.period(), 2);
    }

    void set_shift(double sigma) {
        tau_ = std::max((potential_ - sigma * mass_).mean(), floor_);
        shift_ = sigma;
    }
    [[nodiscard]] double shift() const { return shift_; }

    [[nodiscard]] MatrixXd solve(const MatrixXd& r) const {
        MatrixXd out(r.rows(), r.cols());
        const auto rows = static_cast<std::size_t>(r.rows());
        for (Index j = 0; j < r.cols(); ++j) {
            solver_.solve(tau_, std::span<const double>(r.col(j).data(), rows),
                          std::span<double>(out.col(j).data(), rows));
        }
        return out;
    }

private:
    PeriodicLaplacianSolver solver_;
    VectorXd mass_;
    VectorXd potential_;
    double floor_ = 1.0;
    double tau_ = 1.0;
    double shift_ = 0.0;
};

RawEigen lobpcg_raw(const SparseRowMatrix& k, const VectorXd& mass, const SolverConfig& cfg,
                    FourierPreconditioner* fourier) {
    const Index n = k.rows();
    const Index want = cfg.k;
    Index block = cfg.block_size > 0 ? cfg.block_size : cfg.k + 4;
    block = std::min(block, std::max<Index>(want, n / 3));
    const double norm_k = norm_estimate(k);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    MatrixXd x(n, block);
    for (Index j = 0; j < block; ++j) {
        for (Index i = 0; i < n; ++i) x(i, j) = normal(rng);
    }
    if (cfg.warm_start) {
        const auto& warm = *cfg.warm_start;
        for (std::size_t j = 0; j < warm.size() && static_cast<Index>(j) < block; ++j) {
            if (warm[j].size() != static_cast<std::size_t>(n)) {
                throw InvalidArgument("warm start vector has the wrong length");
            }
            // Keep a small random part so the block stays full rank.
            const VectorXd w = Eigen::Map<const VectorXd>(warm[j].values().data(), n);
            x.col(static_cast<Index>(j)) = w / w.norm() + 1e-6 * x.col(static_cast<Index>(j)) / x.col(static_cast<Index>(j)).norm();
        }
    }
    x = mass_orthonormalize(mass, x);
    if (x.cols() < block) throw ConvergenceError("initial block is rank deficient");

    MatrixXd kx = multiply(k, x);
    VectorXd theta;
    {
        MatrixXd h = x.transpose() * kx;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
        theta = es.eigenvalues();
        x = x * es.eigenvectors();
        kx = kx * es.eigenvectors();
    }

    const double lower = gershgorin_lower(k, mass);
    ShiftedFactor pre;
    bool have_pre = false;
    int refreshes = 0;
    if (std::isfinite(cfg.shift)) {
        if (fourier) {
            fourier->set_shift(cfg.shift);
        } else if (!pre.factor(k, mass, cfg.shift)) {
            throw InvalidArgument("configured preconditioner shift is not below the spectrum");
        }
        have_pre = true;
        refreshes = 2;
    }
    const auto current_shift = [&] { return fourier ? fourier->shift() : pre.shift(); };
    const auto reshift = [&](double upper, double gap) {
        if (fourier) {
            fourier->set_shift(upper - gap);
        } else {
            place_shift(pre, k, mass, upper, gap, lower);
        }
    };

    MatrixXd p;
    VectorXd res(block);
    for (int it = 0; it < cfg.max_iter; ++it) {
        MatrixXd r = kx - mass.asDiagonal() * x * theta.asDiagonal();
        for (Index j = 0; j < block; ++j) res(j) = r.col(j).norm() / (norm_k * x.col(j).norm());
        if ((res.head(want).array() <= cfg.tol).all()) {
            RawEigen out{theta.head(want), x.leftCols(want), res.head(want), it};
            return out;
        }

        const double spread = theta(want - 1) - theta(0);
        const double gap = std::max(0.1 * spread, 1e-2 * (std::abs(theta(0)) + 1.0));
        if (!have_pre) {
            reshift(theta(0), gap);
            have_pre = true;
        } else if (refreshes < 2 && res.head(want).maxCoeff() < 1e-3 &&
                   theta(0) - current_shift() > 8.0 * gap) {
            reshift(theta(0), gap);
            ++refreshes;
        }

        std::vector<Index> active;
        for (Index j = 0; j < block; ++j) {
            if (res(j) > cfg.tol) active.push_back(j);
        }
        MatrixXd ra(n, static_cast<Index>(active.size()));
        for (std::size_t c = 0; c < active.size(); ++c) ra.col(static_cast<Index>(c)) = r.col(active[c]);
        const MatrixXd w = fourier ? fourier->solve(ra) : pre.solve(ra);

        MatrixXd s(n, x.cols() + w.cols() + p.cols());
        s << x, w, p;
        const MatrixXd q = mass_orthonormalize(mass, s);
        const MatrixXd kq = multiply(k, q);
        MatrixXd h = q.transpose() * kq;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
        const MatrixXd c = es.eigenvectors().leftCols(block);
        MatrixXd xn = q * c;
        MatrixXd kxn = kq * c;
        theta = es.eigenvalues().head(block);

        const MatrixXd overlap = x.transpose() * mass.asDiagonal() * xn;
        p = xn - x * overlap;
        x = std::move(xn);
        kx = std::move(kxn);
    }
    std::ostringstream msg;
    msg << "eigensolver did not converge in " << cfg.max_iter << " iterations; residuals:";
    for (Index j = 0; j < want; ++j) msg << ' ' << res(j);
    throw ConvergenceError(msg.str());
}

// Above this size a full-grid pencil is preconditioned by FFT rather than a
// sparse factorization, whose fill grows quickly in three dimensions.
constexpr Index kFactorLimit = 8192;

RawEigen solve_raw(const SparseRowMatrix& k, const VectorXd& mass, const SolverConfig& cfg,
                   const GridSpec* periodic = nullptr) {
    if (cfg.k < 1) throw InvalidArgument("eigensolver needs k >= 1");
    if (!(cfg.tol > 0.0)) throw InvalidArgument("eigensolver needs tol > 0");
    if (cfg.k > k.rows()) throw InvalidArgument("k exceeds the problem dimension");
    if (static_cast<std::size_t>(k.rows()) <= cfg.dense_threshold) return dense_raw(k, mass, cfg.k);

    std::unique_ptr<FourierPreconditioner> fourier;
    if (periodic && k.rows() > kFactorLimit) {
        fourier = std::make_unique<FourierPreconditioner>(*periodic, k, mass);
    }
    RawEigen raw = lobpcg_raw(k, mass, cfg, fourier.get());
    // Final Rayleigh-Ritz on the converged block keeps the output exactly
    // mass-orthonormal and sorted.
    MatrixXd x = mass_orthonormalize(mass, raw.vectors);
    MatrixXd h = x.transpose() * multiply(k, x);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    raw.vectors = x * es.eigenvectors();
    raw.values = es.eigenvalues();
    for (Index j = 0; j < raw.vectors.cols(); ++j) fix_sign(raw.vectors.col(j));
    raw.residuals = residual_norms(k, mass, raw.vectors, raw.values, norm_estimate(k));
    return raw;
}

SparseRowMatrix principal_submatrix(const SparseRowMatrix& k, const std::vector<Index>& rows) {
    std::vector<Index> pos(static_cast<std::size_t>(k.rows()), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) pos[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (SparseRowMatrix::InnerIterator it(k, rows[i]); it; ++it) {
            const Index c = pos[static_cast<std::size_t>(it.col())];
            if (c >= 0) t.emplace_back(static_cast<int>(i), static_cast<int>(c), it.value());
        }
    }
    SparseRowMatrix sub(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
    sub.setFromTriplets(t.begin(), t.end());
    sub.makeCompressed();
    return sub;
}

std::vector<EigenPair> to_pairs(const Pencil& pencil, const RawEigen& raw,
                                const std::vector<Index>* support = nullptr) {
    std::vector<EigenPair> pairs;
    const double scale = 1.0 / std::sqrt(pencil.cell_volume);
    for (Index j = 0; j < raw.values.size(); ++j) {
        ScalarField v(pencil.grid);
        if (support) {
            for (std::size_t i = 0; i < support->size(); ++i) {
                v[static_cast<std::size_t>((*support)[i])] = raw.vectors(static_cast<Index>(i), j) * scale;
            }
        } else {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = raw.vectors(static_cast<Index>(i), j) * scale;
        }
        pairs.push_back({raw.values(j), std::move(v), raw.residuals(j), static_cast<int>(j) + 1});
    }
    return pairs;
}

VectorXd as_vector(const ScalarField& f) {
    return Eigen::Map<const VectorXd>(f.values().data(), static_cast<Index>(f.size()));
}

VectorXd mass_vector(const Pencil& pencil) {
    return Eigen::Map<const VectorXd>(pencil.mass.data(), static_cast<Index>(pencil.mass.size()));
}

double quadratic(const SparseRowMatrix& k, const VectorXd& x) {
    MatrixXd kx = multiply(k, x);
    return x.dot(kx.col(0));
}

}  // namespace

double norm_estimate(const SparseRowMatrix& k, int steps) {
    const Index n = k.rows();
    MatrixXd x(n, 1);
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Index i = 0; i < n; ++i) x(i, 0) = unit(rng);
    x /= x.norm();
    double est = 0.0;
    for (int s = 0; s < steps; ++s) {
        MatrixXd y = multiply(k, x);
        est = y.norm();
        if (est == 0.0) return 1.0;
        x = y / est;
    }
    return est;
}

std::vector<EigenPair> solve_generalized(const Pencil& pencil, const SolverConfig& cfg) {
    const VectorXd mass = mass_vector(pencil);
    if (pencil.zero_mass_count() > 0 || (mass.array() < 0.0).any()) {
        if (!cfg.restrict_to_support || (mass.array() < 0.0).any()) {
            throw SingularMassError(
                "weighted mass is singular; use neg_inf_certificate or restrict to the support");
        }
        std::vector<Index> support;
        for (Index i = 0; i < mass.size(); ++i) {
            if (mass(i) > 0.0) support.push_back(i);
        }
        const SparseRowMatrix sub = principal_submatrix(pencil.stiffness, support);
        VectorXd sub_mass(static_cast<Index>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) sub_mass(static_cast<Index>(i)) = mass(support[i]);
        SolverConfig sub_cfg = cfg;
        sub_cfg.warm_start = nullptr;
        return to_pairs(pencil, solve_raw(sub, sub_mass, sub_cfg), &support);
    }
    return to_pairs(pencil, solve_raw(pencil.stiffness, mass, cfg, &pencil.grid));
}

std::vector<EigenPair> solve_dense(const Pencil& pencil, int k) {
    const VectorXd mass = mass_vector(pencil);
    if (!(mass.array() > 0.0).all()) throw SingularMassError("dense solve needs a positive mass");
    return to_pairs(pencil, dense_raw(pencil.stiffness, mass, k));
}

double rayleigh_quotient(const Pencil& pencil, const ScalarField& v) {
    const VectorXd x = as_vector(v);
    const double den = x.dot(mass_vector(pencil).cwiseProduct(x));
    if (!(den > 0.0)) throw SingularMassError("zero weighted mass along this direction");
    return quadratic(pencil.stiffness, x) / den;
}

std::vector<std::vector<double>> mass_gram(const Pencil& pencil, const std::vector<EigenPair>& pairs) {
    const VectorXd mass = mass_vector(pencil);
    std::vector<std::vector<double>> g(pairs.size(), std::vector<double>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const VectorXd xi = as_vector(pairs[i].vector);
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            g[i][j] = pencil.cell_volume * xi.dot(mass.cwiseProduct(as_vector(pairs[j].vector)));
        }
    }
    return g;
}

double subspace_sup(const Pencil& pencil, const std::vector<ScalarField>& basis) {
    const auto d = static_cast<Index>(basis.size());
    MatrixXd v(static_cast<Index>(pencil.size()), d);
    for (Index j = 0; j < d; ++j) v.col(j) = as_vector(basis[static_cast<std::size_t>(j)]);
    const VectorXd mass = mass_vector(pencil);
    MatrixXd h = v.transpose() * multiply(pencil.stiffness, v);
    MatrixXd g = v.transpose() * mass.asDiagonal() * v;
    h = 0.5 * (h + h.transpose()).eval();
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(h, g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SingularMassError("subspace has degenerate weighted Gram matrix");
    return es.eigenvalues().maxCoeff();
}

MinmaxReport minmax_certificate(const Pencil& pencil, const std::vector<EigenPair>& pairs,
                                int trials, std::uint64_t seed, double tol) {
    MinmaxReport report;
    const std::size_t count = pairs.size();
    std::vector<ScalarField> span;
    report.span_ok = true;
    for (std::size_t i = 0; i < count; ++i) {
        span.push_back(pairs[i].vector);
        const double lam = pairs[i].value;
        const double margin = std::abs(subspace_sup(pencil, span) - lam) / std::max(std::abs(lam), 1.0);
        report.span_margin.push_back(margin);
        report.span_ok = report.span_ok && margin <= tol;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> expo(-6.0, 0.0);
    for (std::size_t i = 1; i <= count; ++i) {
        const double lam = pairs[i - 1].value;
        double worst = std::numeric_limits<double>::infinity();
        for (int t = 0; t < trials; ++t) {
            std::vector<ScalarField> basis;
            for (std::size_t b = 0; b < i; ++b) {
                ScalarField v(pencil.grid);
                for (std::size_t j = 0; j < count; ++j) {
                    const double c = normal(rng);
                    for (std::size_t q = 0; q < v.size(); ++q) v[q] += c * pairs[j].vector[q];
                }
                const double delta = std::pow(10.0, expo(rng));
                const ScalarField noise = random_smooth_field(pencil.grid, rng(), 3);
                double vmax = 0.0;
                for (double e : v.values()) vmax = std::max(vmax, std::abs(e));
                for (std::size_t q = 0; q < v.size(); ++q) v[q] += delta * vmax * noise[q];
                basis.push_back(std::move(v));
            }
            const double margin = (subspace_sup(pencil, basis) - lam) / std::max(std::abs(lam), 1.0);
            worst = std::min(worst, margin);
            if (margin < -tol) ++report.violations;
        }
        report.trial_margin.push_back(worst);
    }
    report.passed = report.span_ok && report.violations == 0;
    return report;
}

KernelBasis detect_kernel(const OperatorHandle& op, double tol, std::uint64_t seed) {
    const Pencil pencil = make_pencil(op, WeightField::constant(op.grid()));
    KernelBasis out;
    out.tol = std::isfinite(tol) ? tol : 1e-8 * norm_estimate(pencil.stiffness);
    const int cap = static_cast<int>(std::min<std::size_t>(pencil.size() - 1, 64));
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.tol = 1e-10;
    cfg.k = std::min(4, cap);
    std::vector<EigenPair> pairs;
    for (;;) {
        pairs = solve_generalized(pencil, cfg);
        if (pairs.back().value > 10.0 * out.tol || cfg.k >= cap) break;
        cfg.k = std::min(2 * cfg.k, cap);
    }
    for (const auto& p : pairs) {
        const double a = std::abs(p.value);
        if (a <= out.tol) {
            out.basis.push_back(p.vector);
            out.eigenvalues.push_back(p.value);
        } else if (a <= 10.0 * out.tol) {
            out.ambiguous = true;
        }
    }
    return out;
}

NegInfCertificate neg_inf_certificate(const Pencil& pencil, std::uint64_t seed) {
    NegInfCertificate cert{.direction = ScalarField(pencil.grid)};
    std::vector<Index> zero_set;
    for (std::size_t i = 0; i < pencil.mass.size(); ++i) {
        if (pencil.mass[i] == 0.0) zero_set.push_back(static_cast<Index>(i));
    }
    cert.zero_set_size = zero_set.size();
    if (zero_set.empty()) return cert;

    const SparseRowMatrix sub = principal_submatrix(pencil.stiffness, zero_set);
    const VectorXd ones = VectorXd::Ones(sub.rows());
    SolverConfig cfg;
    cfg.k = 1;
    cfg.seed = seed;
    cfg.tol = 1e-10;
    const RawEigen raw = solve_raw(sub, ones, cfg);
    cert.restricted_eigenvalue = raw.values(0);
    if (!(raw.values(0) < 0.0)) return cert;

    const double scale = 1.0 / std::sqrt(pencil.cell_volume);
    for (std::size_t i = 0; i < zero_set.size(); ++i) {
        cert.direction[static_cast<std::size_t>(zero_set[i])] = raw.vectors(static_cast<Index>(i), 0) * scale;
    }
    cert.energy = pencil.cell_volume * quadratic(pencil.stiffness, as_vector(cert.direction));
    cert.found = cert.energy < 0.0;
    return cert;
}

std::vector<double> divergence_sequence(const Pencil& pencil, const ScalarField& w,
                                        std::span<const double> alphas) {
    std::vector<double> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        ScalarField shifted = w;
        for (double& v : shifted.values()) v += a;
        out.push_back(rayleigh_quotient(pencil, shifted));
    }
    return out;
}

}  // namespace yamabe
