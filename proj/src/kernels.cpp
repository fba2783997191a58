// SPDX-License-Identifier: Apache-2.0
#include "yamabe/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace yamabe::kernels {
namespace {

std::size_t total_points(const StencilSpec& spec) {
    std::size_t total = 1;
    for (int a = 0; a < spec.dim; ++a) total *= static_cast<std::size_t>(spec.points_per_axis);
    return total;
}

inline double stencil_row(const StencilSpec& spec, std::span<const double> diag,
                          std::span<const double> in, std::size_t i) {
    const auto m = static_cast<std::size_t>(spec.points_per_axis);
    const double center = in[i];
    double acc = 0.0;
    std::size_t stride = 1;
    for (int a = spec.dim - 1; a >= 0; --a) {
        const std::size_t coord = (i / stride) % m;
        const std::size_t up = coord + 1 < m ? i + stride : i - (m - 1) * stride;
        const std::size_t down = coord > 0 ? i - stride : i + (m - 1) * stride;
        acc += (2.0 * center - in[up]) - in[down];
        stride *= m;
    }
    return spec.scale * acc + diag[i] * center;
}

// Edge form of the row: sum over the forward neighbours of (v_i - v_up)^2
// plus the diagonal term. Summed over i it equals v' A v without the
// cancellation of the row form.
inline double edge_term(const StencilSpec& spec, std::span<const double> diag,
                        std::span<const double> in, std::size_t i) {
    const auto m = static_cast<std::size_t>(spec.points_per_axis);
    const double center = in[i];
    double acc = 0.0;
    std::size_t stride = 1;
    for (int a = spec.dim - 1; a >= 0; --a) {
        const std::size_t coord = (i / stride) % m;
        const std::size_t up = coord + 1 < m ? i + stride : i - (m - 1) * stride;
        const double d = center - in[up];
        acc += d * d;
        stride *= m;
    }
    return spec.scale * acc + diag[i] * center * center;
}

template <class Term>
double block_partial(std::size_t begin, std::size_t end, Term&& term) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    return s;
}

template <class Term>
double reduce_serial(std::size_t size, Term&& term) {
    double total = 0.0;
    for (std::size_t b = 0; b < size; b += kReduceBlock) {
        total += block_partial(b, std::min(size, b + kReduceBlock), term);
    }
    return total;
}

template <class Term>
double reduce_parallel(std::size_t size, Term&& term) {
    const std::size_t blocks = (size + kReduceBlock - 1) / kReduceBlock;
    if (blocks <= 1) return reduce_serial(size, term);
    std::vector<double> partial(blocks);
    const auto nb = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nb; ++b) {
        const auto begin = static_cast<std::size_t>(b) * kReduceBlock;
        partial[static_cast<std::size_t>(b)] =
            block_partial(begin, std::min(size, begin + kReduceBlock), term);
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace

void stencil_apply_serial(const StencilSpec& spec, std::span<const double> diag,
                          std::span<const double> in, std::span<double> out) {
    const std::size_t total = total_points(spec);
    for (std::size_t i = 0; i < total; ++i) out[i] = stencil_row(spec, diag, in, i);
}

void stencil_apply(const StencilSpec& spec, std::span<const double> diag,
                   std::span<const double> in, std::span<double> out) {
    const auto total = static_cast<std::int64_t>(total_points(spec));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
        out[static_cast<std::size_t>(i)] = stencil_row(spec, diag, in, static_cast<std::size_t>(i));
    }
}

double stencil_energy_serial(const StencilSpec& spec, std::span<const double> diag,
                             std::span<const double> in) {
    return reduce_serial(total_points(spec), [&](std::size_t i) { return edge_term(spec, diag, in, i); });
}

double stencil_energy(const StencilSpec& spec, std::span<const double> diag,
                      std::span<const double> in) {
    return reduce_parallel(total_points(spec), [&](std::size_t i) { return edge_term(spec, diag, in, i); });
}

void csr_matvec_serial(const CsrView& a, std::span<const double> x, std::span<double> y) {
    const std::size_t rows = a.outer.size() - 1;
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int k = a.outer[r]; k < a.outer[r + 1]; ++k) s += a.values[k] * x[a.inner[k]];
        y[r] = s;
    }
}

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
    const auto rows = static_cast<std::int64_t>(a.outer.size()) - 1;
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int k = a.outer[r]; k < a.outer[r + 1]; ++k) s += a.values[k] * x[a.inner[k]];
        y[static_cast<std::size_t>(r)] = s;
    }
}

double sum_serial(std::span<const double> x) {
    return reduce_serial(x.size(), [&](std::size_t i) { return x[i]; });
}
double sum(std::span<const double> x) {
    return reduce_parallel(x.size(), [&](std::size_t i) { return x[i]; });
}

double dot_serial(std::span<const double> x, std::span<const double> y) {
    return reduce_serial(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}
double dot(std::span<const double> x, std::span<const double> y) {
    return reduce_parallel(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

double weighted_dot_serial(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
    return reduce_serial(x.size(), [&](std::size_t i) { return w[i] * x[i] * y[i]; });
}
double weighted_dot(std::span<const double> w, std::span<const double> x,
                    std::span<const double> y) {
    return reduce_parallel(x.size(), [&](std::size_t i) { return w[i] * x[i] * y[i]; });
}

double abs_pow_sum_serial(std::span<const double> x, double p) {
    return reduce_serial(x.size(), [&](std::size_t i) { return std::pow(std::abs(x[i]), p); });
}
double abs_pow_sum(std::span<const double> x, double p) {
    return reduce_parallel(x.size(), [&](std::size_t i) { return std::pow(std::abs(x[i]), p); });
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace yamabe::kernels
