// SPDX-License-Identifier: Apache-2.0
#include "yamabe/critical.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "yamabe/kernels.hpp"

namespace yamabe {
namespace {

ScalarField residual_field(const OperatorHandle& op, const ScalarField& w, double eps) {
    ScalarField r = op.apply(w);
    const double N = op.grid().critical_exponent();
    for (std::size_t i = 0; i < w.size(); ++i) r[i] -= eps * std::pow(std::abs(w[i]), N - 2.0) * w[i];
    return r;
}

double volume_norm(const ScalarField& f) {
    return std::sqrt(f.grid().cell_volume() * kernels::dot(f.values(), f.values()));
}

}  // namespace

ScalarField critical_power(const ScalarField& w) {
    const double N = w.grid().critical_exponent();
    ScalarField out(w.grid());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::pow(std::abs(w[i]), N - 2.0) * w[i];
    return out;
}

double critical_residual(const OperatorHandle& op, const ScalarField& w, double eps) {
    return volume_norm(residual_field(op, w, eps));
}

CriticalSolve newton_critical(const OperatorHandle& op, ScalarField w0, double eps, double tol,
                              int max_iter) {
    const double N = op.grid().critical_exponent();
    const auto size = static_cast<Eigen::Index>(w0.size());
    const Eigen::SparseMatrix<double> a = op.matrix();

    CriticalSolve out{.w = std::move(w0)};
    ScalarField r = residual_field(op, out.w, eps);
    out.residual = volume_norm(r);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    for (; out.iterations < max_iter; ++out.iterations) {
        if (out.residual <= tol) break;
        Eigen::SparseMatrix<double> jac = a;
        for (Eigen::Index i = 0; i < size; ++i) {
            jac.coeffRef(i, i) -= eps * (N - 1.0) * std::pow(std::abs(out.w[static_cast<std::size_t>(i)]), N - 2.0);
        }
        if (!analyzed) {
            lu.analyzePattern(jac);
            analyzed = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) break;
        const Eigen::VectorXd step =
            lu.solve(Eigen::Map<const Eigen::VectorXd>(r.values().data(), size));
        if (lu.info() != Eigen::Success || !step.allFinite()) break;

        bool accepted = false;
        for (double t = 1.0; t > 1e-4; t *= 0.5) {
            ScalarField trial = out.w;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= t * step[static_cast<Eigen::Index>(i)];
            ScalarField rt = residual_field(op, trial, eps);
            const double nt = volume_norm(rt);
            if (nt < (1.0 - 1e-4 * t) * out.residual) {
                out.w = std::move(trial);
                r = std::move(rt);
                out.residual = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    out.converged = out.residual <= tol;
    return out;
}

}  // namespace yamabe
