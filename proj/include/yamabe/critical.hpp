// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "yamabe/operator.hpp"

namespace yamabe {

/// |w|^(N-2) w.
ScalarField critical_power(const ScalarField& w);

/// Volume-weighted 2-norm of apply(w) - eps |w|^(N-2) w.
double critical_residual(const OperatorHandle& op, const ScalarField& w, double eps);

struct CriticalSolve {
    ScalarField w;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Damped Newton for apply(w) = eps |w|^(N-2) w from w0. Each step solves
/// with the Jacobian A - eps (N-1) |w|^(N-2) by sparse LU and backtracks on
/// the residual norm.
CriticalSolve newton_critical(const OperatorHandle& op, ScalarField w0, double eps,
                              double tol = 1e-11, int max_iter = 40);

}  // namespace yamabe
