// SPDX-License-Identifier: Apache-2.0
#include "yamabe/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "yamabe/errors.hpp"

namespace yamabe {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct PeriodicLaplacianSolver::Plans {
    std::size_t real_size = 0;
    std::size_t complex_size = 0;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::mutex use;

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        fftw_free(real);
        fftw_free(spec);
    }
};

PeriodicLaplacianSolver::PeriodicLaplacianSolver(const GridSpec& grid, double scale)
    : grid_(grid), plans_(std::make_unique<Plans>()) {
    const int n = grid.dim();
    const int m = grid.points_per_axis();
    std::vector<int> dims(static_cast<std::size_t>(n), m);
    const int last = m / 2 + 1;
    plans_->real_size = grid.size();
    plans_->complex_size = grid.size() / static_cast<std::size_t>(m) * static_cast<std::size_t>(last);

    {
        std::lock_guard lock(planner_mutex());
        plans_->real = fftw_alloc_real(plans_->real_size);
        plans_->spec = fftw_alloc_complex(plans_->complex_size);
        plans_->forward = fftw_plan_dft_r2c(n, dims.data(), plans_->real, plans_->spec, FFTW_ESTIMATE);
        plans_->backward = fftw_plan_dft_c2r(n, dims.data(), plans_->spec, plans_->real, FFTW_ESTIMATE);
    }
    if (!plans_->forward || !plans_->backward) throw Error("FFTW planning failed");

    // Per-axis 1D symbols, then sum over axes in r2c order (last axis halved).
    const double h = grid.spacing();
    std::vector<double> axis(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double s = std::sin(std::numbers::pi * k / m);
        axis[static_cast<std::size_t>(k)] = scale * 4.0 / (h * h) * s * s;
    }
    symbol_.assign(plans_->complex_size, 0.0);
    for (std::size_t q = 0; q < plans_->complex_size; ++q) {
        std::size_t r = q;
        double s = axis[r % static_cast<std::size_t>(last)];
        r /= static_cast<std::size_t>(last);
        for (int a = 0; a < n - 1; ++a) {
            s += axis[r % static_cast<std::size_t>(m)];
            r /= static_cast<std::size_t>(m);
        }
        symbol_[q] = s;
    }
}

PeriodicLaplacianSolver::~PeriodicLaplacianSolver() = default;

void PeriodicLaplacianSolver::solve(double shift, std::span<const double> rhs,
                                    std::span<double> out) const {
    std::lock_guard lock(plans_->use);
    std::copy(rhs.begin(), rhs.end(), plans_->real);
    fftw_execute(plans_->forward);
    const double norm = 1.0 / static_cast<double>(plans_->real_size);
    for (std::size_t q = 0; q < plans_->complex_size; ++q) {
        const double d = symbol_[q] + shift;
        const double f = d != 0.0 ? norm / d : 0.0;
        plans_->spec[q][0] *= f;
        plans_->spec[q][1] *= f;
    }
    fftw_execute(plans_->backward);
    std::copy(plans_->real, plans_->real + plans_->real_size, out.begin());
}

std::vector<double> even_synthesis(const GridSpec& grid, std::span<const double> coef) {
    if (coef.size() != grid.size()) throw InvalidArgument("coefficient field has the wrong size");
    const int n = grid.dim();
    std::vector<int> dims(static_cast<std::size_t>(n), grid.points_per_axis());
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        buf = fftw_alloc_complex(grid.size());
        plan = fftw_plan_dft(n, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t q = 0; q < grid.size(); ++q) {
        buf[q][0] = coef[q];
        buf[q][1] = 0.0;
    }
    fftw_execute(plan);
    std::vector<double> out(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] = buf[p][0];
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(buf);
    return out;
}

}  // namespace yamabe
