// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "yamabe/operator.hpp"

namespace yamabe {

/// Eigenpair of a pencil (K, M). `vector` is mass-normalized:
/// integral(u^(N-2) v^2) = 1. `residual` is ||Kv - lambda Mv|| / (||K||_est ||v||).
struct EigenPair {
    double value = 0.0;
    ScalarField vector;
    double residual = 0.0;
    int index = 0;
};

struct SolverConfig {
    int k = 1;
    double tol = 1e-8;
    int max_iter = 500;
    int block_size = 0;  // 0 selects k + 4
    std::uint64_t seed = 0;
    /// Preconditioner shift; NaN selects one automatically below the spectrum.
    double shift = std::numeric_limits<double>::quiet_NaN();
    /// Grids with at most this many points use the dense solve.
    std::size_t dense_threshold = 1000;
    /// Allow zero mass entries by solving on the support with v = 0 elsewhere.
    bool restrict_to_support = false;
    /// Optional initial vectors for the iterative path (full-grid pencils only).
    const std::vector<ScalarField>* warm_start = nullptr;
};

/// 2-norm estimate of a symmetric matrix from `steps` power iterations.
double norm_estimate(const SparseRowMatrix& k, int steps = 20);

/// k algebraically smallest eigenpairs of the pencil, ascending and
/// mass-orthonormal. Iterative (block preconditioned) unless the pencil is
/// small enough for the dense path.
std::vector<EigenPair> solve_generalized(const Pencil& pencil, const SolverConfig& cfg);

/// Dense full-spectrum solve; the k smallest pairs. Used as the oracle.
std::vector<EigenPair> solve_dense(const Pencil& pencil, int k);

/// cell_volume * v'Kv / (cell_volume * v'Mv). Throws SingularMassError on a zero denominator.
double rayleigh_quotient(const Pencil& pencil, const ScalarField& v);

/// integral(u^(N-2) v_i v_j) for the given pairs.
std::vector<std::vector<double>> mass_gram(const Pencil& pencil, const std::vector<EigenPair>& pairs);

/// Largest generalized eigenvalue of the pencil projected onto span(basis):
/// the supremum of the Rayleigh quotient over that subspace.
double subspace_sup(const Pencil& pencil, const std::vector<ScalarField>& basis);

struct MinmaxReport {
    /// Per i: |sup over span(v_1..v_i) - lambda_i| / max(|lambda_i|, 1).
    std::vector<double> span_margin;
    /// Per i: min over random trials of (sup - lambda_i) / max(|lambda_i|, 1).
    std::vector<double> trial_margin;
    int violations = 0;
    bool span_ok = false;
    bool passed = false;
};

MinmaxReport minmax_certificate(const Pencil& pencil, const std::vector<EigenPair>& pairs,
                                int trials, std::uint64_t seed, double tol = 1e-9);

struct KernelBasis {
    std::vector<ScalarField> basis;  // volume-orthonormal
    std::vector<double> eigenvalues;
    double tol = 0.0;
    bool ambiguous = false;  // some eigenvalue lies in (tol, 10 tol]
};

/// Eigenvectors of the unweighted operator with |lambda| <= tol.
/// A NaN tol selects 1e-8 * ||A||_est.
KernelBasis detect_kernel(const OperatorHandle& op,
                          double tol = std::numeric_limits<double>::quiet_NaN(),
                          std::uint64_t seed = 0);

struct NegInfCertificate {
    bool found = false;
    ScalarField direction;  // supported where the mass vanishes, volume-normalized
    double energy = 0.0;
    double restricted_eigenvalue = 0.0;
    std::size_t zero_set_size = 0;
};

/// Smallest eigenvalue of the stiffness restricted to the zero set of the mass.
/// When negative, the returned direction has negative energy and zero mass.
NegInfCertificate neg_inf_certificate(const Pencil& pencil, std::uint64_t seed = 0);

/// Rayleigh quotients of w + alpha for each alpha.
std::vector<double> divergence_sequence(const Pencil& pencil, const ScalarField& w,
                                        std::span<const double> alphas);

}  // namespace yamabe
