// SPDX-License-Identifier: Apache-2.0
// Serial vs OpenMP timings for the inner kernels. Also checks the two agree bit for bit.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "yamabe/grid.hpp"
#include "yamabe/kernels.hpp"
#include "yamabe/operator.hpp"

using namespace yamabe;
namespace kn = yamabe::kernels;

namespace {

double best_of(int reps, const std::function<void()>& body) {
    double best = INFINITY;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

volatile double sink;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
    int m = 64;
    int reps = 10;
    app.add_option("--m", m, "points per axis (n = 3)")->check(CLI::Range(4, 512));
    app.add_option("--reps", reps, "repetitions, best time is reported")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const GridSpec g(3, m, 2.0 * std::numbers::pi);
    const OperatorHandle op(g, Potential::custom(random_smooth_field(g, 3)));
    const ScalarField x = random_smooth_field(g, 4, 3);
    const ScalarField y = random_positive_weight(g, 5);
    const std::vector<double> diag = op.potential().field.data();
    const kn::StencilSpec spec{3, m, op.stencil_scale()};
    const SparseRowMatrix a = op.matrix();
    const kn::CsrView csr{{a.outerIndexPtr(), static_cast<std::size_t>(a.rows() + 1)},
                          {a.innerIndexPtr(), static_cast<std::size_t>(a.nonZeros())},
                          {a.valuePtr(), static_cast<std::size_t>(a.nonZeros())}};
    std::vector<double> out_s(g.size()), out_p(g.size());
    const auto xs = std::span<const double>(x.data());
    const auto ys = std::span<const double>(y.data());

    std::printf("grid 3 x %d (%zu points), %d threads, best of %d\n", m, g.size(), kn::max_threads(), reps);
    std::printf("%-16s %12s %12s %8s %s\n", "kernel", "serial [ms]", "openmp [ms]", "speedup", "identical");
    int mismatches = 0;
    auto row = [&](const char* name, const std::function<double()>& ser, const std::function<double()>& par) {
        double rs = 0.0, rp = 0.0;
        const double ts = best_of(reps, [&] { rs = ser(); });
        const double tp = best_of(reps, [&] { rp = par(); });
        const bool same = rs == rp && out_s == out_p;
        mismatches += same ? 0 : 1;
        std::printf("%-16s %12.3f %12.3f %8.2f %s\n", name, 1e3 * ts, 1e3 * tp, ts / tp, same ? "yes" : "NO");
        sink = rs + rp;
    };

    row("stencil_apply",
        [&] { kn::stencil_apply_serial(spec, diag, xs, out_s); return 0.0; },
        [&] { kn::stencil_apply(spec, diag, xs, out_p); return 0.0; });
    row("stencil_energy",
        [&] { return kn::stencil_energy_serial(spec, diag, xs); },
        [&] { return kn::stencil_energy(spec, diag, xs); });
    row("csr_matvec",
        [&] { kn::csr_matvec_serial(csr, xs, out_s); return 0.0; },
        [&] { kn::csr_matvec(csr, xs, out_p); return 0.0; });
    row("sum", [&] { return kn::sum_serial(xs); }, [&] { return kn::sum(xs); });
    row("dot", [&] { return kn::dot_serial(xs, ys); }, [&] { return kn::dot(xs, ys); });
    row("weighted_dot",
        [&] { return kn::weighted_dot_serial(ys, xs, xs); },
        [&] { return kn::weighted_dot(ys, xs, xs); });
    row("abs_pow_sum", [&] { return kn::abs_pow_sum_serial(xs, 6.0); }, [&] { return kn::abs_pow_sum(xs, 6.0); });
    return mismatches == 0 ? 0 : 1;
}
