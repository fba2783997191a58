// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "yamabe/invariants.hpp"
#include "yamabe/spectral.hpp"

namespace yamabe {

struct NodalCheck {
    bool nodal = false;
    double positive_mass = 0.0;  // integral of max(w, 0)^N
    double negative_mass = 0.0;  // integral of max(-w, 0)^N
    double tol = 0.0;
};

/// Both sign masses above nodal_tol. A NaN tol selects 1e-8 * integral |w|^N.
NodalCheck nodal_check(const ScalarField& w,
                       double nodal_tol = std::numeric_limits<double>::quiet_NaN());

/// Share of integral |w|^N carried by the `top` fraction of most loaded points.
double concentration_fraction(const ScalarField& w, double top = 0.01);

/// Sign-changing solution of apply(w) = eps |w|^(N-2) w.
struct NodalSolution {
    ScalarField w;
    int eps_sign = 0;
    /// Constant of the equation before rescaling to |eps| = 1 (mu_2, alpha' or 0).
    double constant = 0.0;
    double euler_residual = 0.0;
    double positive_mass = 0.0;
    double negative_mass = 0.0;
    bool nodal = false;
    double concentration = 0.0;
    /// concentration > 0.5: the grid-scale stand-in for loss of compactness.
    bool concentrated = false;
    bool converged = false;
    int iterations = 0;
    /// ||u - |w|/||w||_N||_N of the self-consistent iteration; NaN elsewhere.
    double fixed_point_residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<TracePoint> trace;
};

/// Fills masses, nodality and the concentration diagnostic of s.w.
void annotate(NodalSolution& s, double nodal_tol = std::numeric_limits<double>::quiet_NaN());

// ---- negative branch ------------------------------------------------------

/// (integral |Lu|^p*)^((n+2)/n) / |integral u Lu| with p* = 2n/(n+2).
/// Throws InvalidArgument when integral u Lu = 0.
double functional_I(const OperatorHandle& op, const ScalarField& u);

/// L2 (volume) gradient density of functional_I at u.
ScalarField functional_I_gradient(const OperatorHandle& op, const ScalarField& u);

/// |Lu|^(-4/(n+2)) Lu, zero where Lu = 0.
ScalarField dual_field(const OperatorHandle& op, const ScalarField& u);

/// -alpha^(n/(n+2)).
double alpha_prime(double alpha, int n);

struct IgConfig {
    int max_iter = 200;
    /// Target for the volume 2-norm of the gradient of I at the returned u.
    double grad_tol = 1e-6;
    double constraint_tol = 1e-8;
    int memory = 8;
    std::uint64_t seed = 0;
    /// Kernel detection threshold; NaN selects the detect_kernel default.
    double kernel_tol = std::numeric_limits<double>::quiet_NaN();
    /// Finish with Newton on L w = -|w|^(N-2) w from the descent point.
    bool polish = true;
};

struct IgState {
    ScalarField u;  // integral u Lu = -1
    double alpha = 0.0;
    double energy = 0.0;
    double gradient_norm = 0.0;
    /// |integral |u|^(N-2) u k| for each volume-normalized kernel vector k.
    std::vector<double> constraint_residuals;
    std::vector<TracePoint> trace;
    KernelBasis kernel;
    int iterations = 0;
    bool converged = false;
    /// Descent start: "v1+v2" when lambda_2 < 0, else "v1".
    std::string start;
};

/// Minimizes I over integral u Lu < 0 with integral |u|^(N-2) u k = 0 for k in
/// ker L. Descent runs on v with Lu = |v|^(N-2) v, by L-BFGS on I(u(v)) plus a
/// kernel penalty ramped x10 from 1 to 1e6; the trace holds that penalized
/// objective, which equals I when the kernel is trivial. Needs lambda_1 < 0.
IgState minimize_I(const OperatorHandle& op, const IgConfig& cfg = {});

struct DualReport {
    NodalSolution solution;  // w' = |alpha'|^((n-2)/4) v, eps_sign = -1
    ScalarField v;
    double alpha = 0.0;
    double alpha_prime = 0.0;
    /// |alpha' + integral |Lu|^p*| / |alpha'|.
    double alpha_prime_identity = 0.0;
    /// ||L v - alpha' |v|^(N-2) v||_2.
    double euler_residual = 0.0;
    /// max over points of | |v|^(N-1) - |Lu| | / max |Lu|.
    double pointwise_residual = 0.0;
    /// |I(v) - alpha| / alpha.
    double identity_residual = 0.0;
    std::vector<double> kernel_orthogonality;
    bool passed = false;
    std::string failure;
};

struct DualTolerances {
    double euler = 1e-6;
    double pointwise = 1e-10;
    double identity = 1e-8;
    double alpha_prime = 1e-12;
    double kernel = 1e-8;
};

/// v = |Lu|^(-4/(n+2)) Lu and the identities it must satisfy at a minimizer.
DualReport dual_transform(const OperatorHandle& op, const IgState& state,
                          const DualTolerances& tol = {});

// ---- positive branch ------------------------------------------------------

struct SelfConsistentConfig {
    double theta = 0.5;
    double fp_tol = 1e-6;
    int max_iter = 200;
    /// Newton on L w = |w|^(N-2) w once the fixed-point residual is below this.
    double polish_below = 1e-2;
    SolverConfig solver;
};

/// u <- (1 - theta) u + theta |w_2(u)| / ||w_2(u)||_N with w_2 the second
/// eigenfunction of (A, u^(N-2)). Returns w' = mu_2^((n-2)/4) w, eps_sign = +1.
/// Throws ConvergenceError when lambda_2(u) leaves (0, inf).
NodalSolution selfconsistent_mu2(const OperatorHandle& op, const ScalarField& u0,
                                 const SelfConsistentConfig& cfg = {});

// ---- zero branch ----------------------------------------------------------

struct ZeroTuning {
    Potential potential;
    double shift = 0.0;
    double lambda2_base = 0.0;
    double lambda2_tuned = 0.0;
    /// Midpoint of the symmetric bracket [c - d, c + d] after the sign check.
    double bisection_shift = 0.0;
    int bisection_steps = 0;
    KernelBasis kernel;
    NodalSolution solution;
};

/// Shifts S by c = -lambda_2(S) so that lambda_2 = 0; the kernel vector is
/// the nodal solution with eps_sign = 0.
ZeroTuning lambda2_zero_tuning(const GridSpec& grid, const Potential& base,
                               double zero_tol = 1e-8, const SolverConfig& solver = {});

}  // namespace yamabe
