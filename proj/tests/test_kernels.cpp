// SPDX-License-Identifier: Apache-2.0
// OpenMP kernels must reproduce their serial references bit for bit at every
// thread count.
#include <doctest.h>

#include <omp.h>

#include <cstring>
#include <random>

#include "yamabe/kernels.hpp"
#include "yamabe/operator.hpp"

using namespace yamabe;

namespace {

std::vector<double> randn(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const int kThreads[] = {1, 2, 3, 8};

}  // namespace

TEST_CASE("reductions match the serial reference") {
    // several blocks plus a ragged tail
    const auto x = randn(5 * kernels::kReduceBlock + 123, 1);
    const auto y = randn(x.size(), 2);
    auto w = randn(x.size(), 3);
    for (auto& v : w) v = std::abs(v);
    for (int t : kThreads) {
        omp_set_num_threads(t);
        CHECK(same_bits(kernels::sum(x), kernels::sum_serial(x)));
        CHECK(same_bits(kernels::dot(x, y), kernels::dot_serial(x, y)));
        CHECK(same_bits(kernels::weighted_dot(w, x, y), kernels::weighted_dot_serial(w, x, y)));
        CHECK(same_bits(kernels::abs_pow_sum(x, 6.0), kernels::abs_pow_sum_serial(x, 6.0)));
        CHECK(same_bits(kernels::abs_pow_sum(x, 1.5), kernels::abs_pow_sum_serial(x, 1.5)));
    }
}

TEST_CASE("reductions are plain sums on small inputs") {
    const std::vector<double> x{1.0, 2.0, 3.5};
    CHECK(kernels::sum(x) == 6.5);
    CHECK(kernels::dot(x, x) == 1.0 + 4.0 + 12.25);
    CHECK(kernels::abs_pow_sum(std::vector<double>{-2.0, 1.0}, 3.0) == 9.0);
    CHECK(kernels::sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("stencil kernels match the serial reference") {
    kernels::StencilSpec spec{3, 20, 1.7};
    const std::size_t n = 20 * 20 * 20;
    const auto v = randn(n, 4);
    const auto diag = randn(n, 5);
    std::vector<double> ref(n), par(n);
    kernels::stencil_apply_serial(spec, diag, v, ref);
    const double e_ref = kernels::stencil_energy_serial(spec, diag, v);
    for (int t : kThreads) {
        omp_set_num_threads(t);
        kernels::stencil_apply(spec, diag, v, par);
        CHECK(same_bits(par, ref));
        CHECK(same_bits(kernels::stencil_energy(spec, diag, v), e_ref));
    }
}

TEST_CASE("stencil agrees with the assembled matrix") {
    const GridSpec g(3, 7, 2.0);
    const OperatorHandle op(g, Potential::custom(random_smooth_field(g, 3)));
    const auto m = op.matrix();
    const ScalarField v(g, randn(g.size(), 6));
    const ScalarField av = op.apply(v);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data().data(), g.size());
    const Eigen::VectorXd y = m * x;
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(av[i] == doctest::Approx(y(i)).epsilon(1e-13));

    // CSR matvec on the same matrix
    std::vector<double> ref(g.size()), par(g.size());
    const auto rows = static_cast<std::size_t>(m.rows());
    const auto nnz = static_cast<std::size_t>(m.nonZeros());
    kernels::CsrView view{{m.outerIndexPtr(), rows + 1}, {m.innerIndexPtr(), nnz}, {m.valuePtr(), nnz}};
    kernels::csr_matvec_serial(view, v.values(), ref);
    for (int t : kThreads) {
        omp_set_num_threads(t);
        kernels::csr_matvec(view, v.values(), par);
        CHECK(same_bits(par, ref));
    }
}
