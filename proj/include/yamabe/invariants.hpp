// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "yamabe/spectral.hpp"

namespace yamabe {

struct TracePoint {
    int iteration = 0;
    double objective = 0.0;
};

struct InvariantEstimate {
    double value = 0.0;
    ScalarField minimizer;
    std::vector<TracePoint> trace;
    bool converged = false;
    /// Volume-weighted 2-norm of the Euler residual at the minimizer.
    double residual = 0.0;
};

/// energy(u) / ||u||_N^2.
double yamabe_functional(const OperatorHandle& op, const ScalarField& u);

struct MuConfig {
    int max_iter = 2000;
    /// Target for ||L u - Y u^(N-1)||_2 at ||u||_N = 1.
    double tol = 1e-9;
    /// Descent hands over to Newton on the Euler equation below this residual.
    double newton_switch = 1e-3;
    std::uint64_t seed = 0;
};

/// Minimizes Y over u >= 0 by preconditioned projected gradient with Armijo
/// backtracking, then polishes with Newton on the Euler equation when that
/// lands on a nonnegative solution with no larger Y. The minimizer is
/// normalized to ||u||_N = 1.
InvariantEstimate estimate_mu(const OperatorHandle& op, const MuConfig& cfg);

/// i-th eigenvalue (1-based) of the pencil (A, u^(N-2)). Needs u > 0.
double lambda_weighted(const OperatorHandle& op, const WeightField& u, int i,
                       const SolverConfig& cfg = {});

/// lambda_2(u) (integral u^N)^(2/n).
double mu2_objective(const OperatorHandle& op, const WeightField& u, const SolverConfig& cfg = {});

struct Mu2Config {
    int max_iter = 40;
    /// Floor on u relative to its mean.
    double u_floor = 1e-6;
    /// Stop when a step improves the objective by less than this (relative).
    double rel_tol = 1e-10;
    /// Eigenvalues within this relative distance of lambda_2 are treated as one cluster.
    double cluster_gap = 1e-10;
    SolverConfig solver;
};

struct Mu2Estimate {
    InvariantEstimate estimate;
    double initial_value = 0.0;
    double sphere_threshold = 0.0;
    bool below_sphere = false;
};

/// Projected descent of lambda_2(u) over integral(u^N) = 1 starting from a constant.
/// Throws ConvergenceError if lambda_2 becomes non-positive.
Mu2Estimate mu2_optimize(const OperatorHandle& op, const Mu2Config& cfg);

/// Derivative density of lambda_2(u) at integral(u^N) = 1 along the constraint;
/// averages over the cluster of lambda_2 when it is degenerate.
ScalarField mu2_gradient(const OperatorHandle& op, const ScalarField& u,
                         const std::vector<EigenPair>& pairs, double cluster_gap);

struct SignInvarianceReport {
    std::vector<double> reference;  // lambda_i(1)
    int trials = 0;
    int sign_flips = 0;
    double max_covariance_residual = 0.0;
    double kernel_tol = 0.0;
    /// Seed of the first weight that flipped a sign, 0 when none did.
    std::uint64_t witness_seed = 0;
    bool passed = false;
};

/// Draws random positive weights and compares the signs of lambda_1..lambda_imax
/// with the unweighted ones; also checks the discrete conformal covariance of
/// the pencil for a random conformal factor per trial.
SignInvarianceReport sign_invariance_experiment(const OperatorHandle& op, int i_max, int trials,
                                                std::uint64_t seed,
                                                const SolverConfig& solver = {});

int sign_of(double value, double zero_tol);

struct NegativeLambdaK {
    Potential potential;
    double lambda_k = 0.0;
    /// R(u_i) of the disjointly supported test functions.
    std::vector<double> test_quotients;
    /// Largest eigenvalue of the k x k projected problem.
    double projected_bound = 0.0;
    /// Largest off-diagonal entry of the projected energy and mass matrices.
    double max_offdiag = 0.0;
    bool verified = false;
};

/// k disjoint wells; each test function is the Dirichlet ground state of A on
/// a ball around one well, the balls far enough apart that the stencil does
/// not couple them.
NegativeLambdaK construct_negative_lambda_k(const GridSpec& grid, int k, double depth,
                                            double radius, double delta = 0.1,
                                            const SolverConfig& solver = {});

struct Prop51Row {
    double eps = 0.0;
    double value = 0.0;
};

struct Prop51Report {
    std::vector<Prop51Row> rows;
    std::vector<double> center;
    double lambda2 = 0.0;
    bool decreasing = false;
    std::string warning;
};

/// Sup of energy(v) / integral(v_eps^(N-2) v^2) over the span of the first two
/// unweighted eigenfunctions, for each eps. v_eps sits at the grid point farthest
/// from the wells (or from the minimum of S); the weight v_eps^(N-2) enters
/// through its radial Fourier transform projected onto the grid modes.
Prop51Report demo_prop51(const OperatorHandle& op, const std::vector<double>& eps_list,
                         double delta, const SolverConfig& solver = {});

}  // namespace yamabe
