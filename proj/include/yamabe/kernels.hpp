// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops. Every kernel has a serial reference (`*_serial`)
// and an OpenMP version with the same name minus the suffix. The two produce
// bit-identical results: element-wise kernels have a fixed per-element
// operation order and reductions are summed in fixed-size blocks whose
// partials are combined in index order, independent of the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace yamabe::kernels {

/// Block length of the deterministic reductions.
inline constexpr std::size_t kReduceBlock = 2048;

/// Periodic (2n+1)-point stencil on an m^n row-major grid:
/// out_i = scale * sum_axes (2 v_i - v_{i+e} - v_{i-e}) + diag_i * v_i.
struct StencilSpec {
    int dim = 3;
    int points_per_axis = 4;
    double scale = 1.0;
};

void stencil_apply_serial(const StencilSpec& spec, std::span<const double> diag,
                          std::span<const double> in, std::span<double> out);
void stencil_apply(const StencilSpec& spec, std::span<const double> diag,
                   std::span<const double> in, std::span<double> out);

/// v' (stencil + diag) v summed edge by edge: scale * sum (v_i - v_up)^2 + sum diag_i v_i^2.
double stencil_energy_serial(const StencilSpec& spec, std::span<const double> diag,
                             std::span<const double> in);
double stencil_energy(const StencilSpec& spec, std::span<const double> diag,
                      std::span<const double> in);

/// Compressed-row view of a sparse matrix.
struct CsrView {
    std::span<const int> outer;  // size rows + 1
    std::span<const int> inner;
    std::span<const double> values;
};

void csr_matvec_serial(const CsrView& a, std::span<const double> x, std::span<double> y);
void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y);

/// Fixed-order sum of x.
double sum_serial(std::span<const double> x);
double sum(std::span<const double> x);

/// Fixed-order sum of x_i * y_i.
double dot_serial(std::span<const double> x, std::span<const double> y);
double dot(std::span<const double> x, std::span<const double> y);

/// Fixed-order sum of w_i * x_i * y_i.
double weighted_dot_serial(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y);
double weighted_dot(std::span<const double> w, std::span<const double> x,
                    std::span<const double> y);

/// Fixed-order sum of |x_i|^p.
double abs_pow_sum_serial(std::span<const double> x, double p);
double abs_pow_sum(std::span<const double> x, double p);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace yamabe::kernels
