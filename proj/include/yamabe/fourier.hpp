// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "yamabe/grid.hpp"

namespace yamabe {

/// Solves (scale * Delta_h + shift) x = b on the periodic grid by FFT, where
/// Delta_h is the same (2n+1)-point Laplacian the operator uses. The shift
/// must keep the symbol positive (shift > 0, or shift = 0 with zero-mean b).
class PeriodicLaplacianSolver {
public:
    PeriodicLaplacianSolver(const GridSpec& grid, double scale);
    ~PeriodicLaplacianSolver();
    PeriodicLaplacianSolver(const PeriodicLaplacianSolver&) = delete;
    PeriodicLaplacianSolver& operator=(const PeriodicLaplacianSolver&) = delete;

    void solve(double shift, std::span<const double> rhs, std::span<double> out) const;

    /// Symbol scale * sum_a (4/h^2) sin^2(pi k_a / m) of mode k, in r2c layout.
    [[nodiscard]] const std::vector<double>& symbol() const noexcept { return symbol_; }

private:
    struct Plans;
    GridSpec grid_;
    std::vector<double> symbol_;
    std::unique_ptr<Plans> plans_;
};

/// f(p) = sum_q coef[q] cos(2 pi j(q) . p / m) for a coefficient field indexed
/// like the grid (negative frequencies wrapped), by one complex FFT.
std::vector<double> even_synthesis(const GridSpec& grid, std::span<const double> coef);

}  // namespace yamabe
