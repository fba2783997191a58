// SPDX-License-Identifier: Apache-2.0
#include "yamabe/nodal.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>

#include "yamabe/critical.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/kernels.hpp"

namespace yamabe {
namespace {

double volume_dot(const ScalarField& a, const ScalarField& b) {
    return a.grid().cell_volume() * kernels::dot(a.values(), b.values());
}

double volume_norm(const ScalarField& a) { return std::sqrt(volume_dot(a, a)); }

double power_integral(const ScalarField& u, double p) {
    return u.grid().cell_volume() * kernels::abs_pow_sum(u.values(), p);
}

double signed_pow(double x, double p) { return x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), p), x); }

void axpy(double a, const ScalarField& x, ScalarField& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// u = A^+ P f with u orthogonal to the kernel, through the bordered system
// [A K; K' 0].
class RangeSolver {
public:
    RangeSolver(const OperatorHandle& op, const std::vector<ScalarField>& kernel)
        : grid_(op.grid()), kernel_(kernel) {
        const auto n = static_cast<Eigen::Index>(grid_.size());
        const auto r = static_cast<Eigen::Index>(kernel.size());
        Eigen::SparseMatrix<double> a = op.matrix();
        if (r > 0) {
            std::vector<Eigen::Triplet<double>> t;
            t.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * n * r));
            for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
                    t.emplace_back(it.row(), it.col(), it.value());
                }
            }
            for (Eigen::Index j = 0; j < r; ++j) {
                const ScalarField& k = kernel[static_cast<std::size_t>(j)];
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double v = k[static_cast<std::size_t>(i)];
                    t.emplace_back(i, n + j, v);
                    t.emplace_back(n + j, i, v);
                }
            }
            a.resize(n + r, n + r);
            a.setFromTriplets(t.begin(), t.end());
        }
        a.makeCompressed();
        lu_.compute(a);
        system_ = a;
        if (lu_.info() != Eigen::Success) throw ConvergenceError("operator factorization failed");
    }

    /// `refine` steps of iterative refinement with long double residuals.
    /// Near the nodal set |Lu|^(-4/(n+2)) magnifies the solve error, so the
    /// final u needs L u = f to working precision.
    [[nodiscard]] ScalarField solve(const ScalarField& f, int refine = 0) const {
        const auto n = static_cast<Eigen::Index>(grid_.size());
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + static_cast<Eigen::Index>(kernel_.size()));
        for (Eigen::Index i = 0; i < n; ++i) rhs[i] = f[static_cast<std::size_t>(i)];
        Eigen::VectorXd x = lu_.solve(rhs);
        for (int r = 0; r < refine; ++r) {
            std::vector<long double> acc(rhs.begin(), rhs.end());
            for (Eigen::Index c = 0; c < system_.outerSize(); ++c) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(system_, c); it; ++it) {
                    acc[static_cast<std::size_t>(it.row())] -=
                        static_cast<long double>(it.value()) * static_cast<long double>(x[c]);
                }
            }
            Eigen::VectorXd res(rhs.size());
            for (Eigen::Index i = 0; i < res.size(); ++i) res[i] = static_cast<double>(acc[static_cast<std::size_t>(i)]);
            x += lu_.solve(res);
        }
        ScalarField u(grid_);
        for (Eigen::Index i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = x[i];
        return u;
    }

    /// Volume pairings of f with the kernel vectors.
    [[nodiscard]] std::vector<double> pairings(const ScalarField& f) const {
        std::vector<double> c;
        for (const auto& k : kernel_) c.push_back(volume_dot(f, k));
        return c;
    }

    [[nodiscard]] ScalarField project(const ScalarField& f) const {
        ScalarField out = f;
        const auto c = pairings(f);
        for (std::size_t j = 0; j < kernel_.size(); ++j) axpy(-c[j], kernel_[j], out);
        return out;
    }

private:
    GridSpec grid_;
    const std::vector<ScalarField>& kernel_;
    Eigen::SparseMatrix<double> system_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

struct VEval {
    explicit VEval(const GridSpec& grid) : grad(grid), u(grid) {}
    double objective = 0.0;  // I plus penalty
    double I = 0.0;
    bool feasible = false;
    ScalarField grad;
    ScalarField u;
};

// I(u(v)) with L u = P |v|^(N-2) v, plus rho * sum_j (c_j / ||v||_N^(N-1))^2
// where c_j pairs |v|^(N-2) v with the kernel.
VEval evaluate_v(const RangeSolver& rs, const std::vector<ScalarField>& kernel,
                 const ScalarField& v, double rho) {
    const GridSpec& grid = v.grid();
    const double n = grid.dim();
    const double N = grid.critical_exponent();
    const double ps = 2.0 * n / (n + 2.0);

    VEval e(grid);
    const ScalarField f = critical_power(v);
    const std::vector<double> c = rs.pairings(f);
    const ScalarField ft = rs.project(f);
    e.u = rs.solve(ft);
    const double energy = volume_dot(e.u, ft);
    if (!(energy < 0.0) || !std::isfinite(energy)) return e;
    const double D = -energy;
    const double Q = power_integral(ft, ps);
    e.I = std::pow(Q, (n + 2.0) / n) / D;
    e.feasible = std::isfinite(e.I);

    ScalarField g1(grid);
    for (std::size_t i = 0; i < g1.size(); ++i) g1[i] = signed_pow(ft[i], ps - 1.0);
    g1 = rs.project(g1);
    const double qa = (n + 2.0) / n * std::pow(Q, 2.0 / n) * ps / D;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double s = (N - 1.0) * std::pow(std::abs(v[i]), N - 2.0);
        // dD = -2 s u.
        e.grad[i] = s * (qa * g1[i] + 2.0 * e.I / D * e.u[i]);
    }
    e.objective = e.I;
    if (rho > 0.0 && !kernel.empty()) {
        const double P = power_integral(v, N);
        const double pa = std::pow(P, -(N - 1.0) / N);
        for (std::size_t j = 0; j < kernel.size(); ++j) {
            const double ct = c[j] * pa;
            e.objective += rho * ct * ct;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double s = (N - 1.0) * std::pow(std::abs(v[i]), N - 2.0);
                e.grad[i] += 2.0 * rho * ct * (pa * s * kernel[j][i] - (N - 1.0) * ct * f[i] / P);
            }
        }
    }
    return e;
}

// Minimizes Phi(b) = integral |u + K b|^N / N, whose stationarity is the
// constraint integral |u|^(N-2) u k_j = 0.
void kernel_correction(ScalarField& u, const std::vector<ScalarField>& kernel) {
    if (kernel.empty()) return;
    const double N = u.grid().critical_exponent();
    const double vol = u.grid().cell_volume();
    const auto r = static_cast<Eigen::Index>(kernel.size());
    const auto phi = [&](const ScalarField& x) { return power_integral(x, N) / N; };
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd g(r);
        Eigen::MatrixXd h(r, r);
        const ScalarField f = critical_power(u);
        double scale = 0.0;
        for (Eigen::Index j = 0; j < r; ++j) {
            const ScalarField& kj = kernel[static_cast<std::size_t>(j)];
            g[j] = volume_dot(f, kj);
            for (Eigen::Index l = 0; l <= j; ++l) {
                const ScalarField& kl = kernel[static_cast<std::size_t>(l)];
                double s = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    s += std::pow(std::abs(u[i]), N - 2.0) * kj[i] * kl[i];
                }
                h(j, l) = h(l, j) = (N - 1.0) * vol * s;
            }
            scale = std::max(scale, std::abs(g[j]));
        }
        if (scale <= 1e-15 * power_integral(u, N - 1.0) + 1e-300) return;
        const Eigen::VectorXd step = h.ldlt().solve(g);
        const double base = phi(u);
        double t = 1.0;
        for (; t > 1e-8; t *= 0.5) {
            ScalarField trial = u;
            for (Eigen::Index j = 0; j < r; ++j) axpy(-t * step[j], kernel[static_cast<std::size_t>(j)], trial);
            if (phi(trial) <= base) {
                u = std::move(trial);
                break;
            }
        }
        if (t <= 1e-8) return;
    }
}

struct LbfgsResult {
    ScalarField x;
    VEval eval;
    int iterations = 0;
};

LbfgsResult lbfgs(const std::function<VEval(const ScalarField&)>& fn, ScalarField x, int max_iter,
                  int memory, double rel_tol, std::vector<TracePoint>& trace, int& counter) {
    VEval e = fn(x);
    if (!e.feasible) throw ConvergenceError("descent start has non-negative energy");
    std::deque<std::pair<ScalarField, ScalarField>> hist;
    std::deque<double> rhos;
    LbfgsResult out{.x = x, .eval = e};
    int stall = 0;
    for (int it = 0; it < max_iter; ++it, ++out.iterations) {
        trace.push_back({counter++, e.objective});
        const double xn = volume_norm(x);
        const double gn = volume_norm(e.grad);
        if (gn * xn <= rel_tol * std::abs(e.objective)) break;

        // Two-loop recursion.
        ScalarField d = e.grad;
        std::vector<double> alphas(hist.size());
        for (std::size_t k = hist.size(); k-- > 0;) {
            alphas[k] = rhos[k] * volume_dot(hist[k].first, d);
            axpy(-alphas[k], hist[k].second, d);
        }
        double gamma = 0.0;
        if (!hist.empty()) {
            gamma = volume_dot(hist.back().first, hist.back().second) /
                    volume_dot(hist.back().second, hist.back().second);
        } else {
            gamma = 1e-3 * xn / gn;
        }
        for (double& di : d.values()) di *= gamma;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double beta = rhos[k] * volume_dot(hist[k].second, d);
            axpy(alphas[k] - beta, hist[k].first, d);
        }
        for (double& di : d.values()) di = -di;
        double slope = volume_dot(e.grad, d);
        if (!(slope < 0.0)) {
            hist.clear();
            rhos.clear();
            d = e.grad;
            for (double& di : d.values()) di *= -1e-3 * xn / gn;
            slope = volume_dot(e.grad, d);
        }

        bool accepted = false;
        ScalarField xt(x.grid());
        VEval et(x.grid());
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            xt = x;
            axpy(t, d, xt);
            et = fn(xt);
            if (et.feasible && et.objective <= e.objective + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        ScalarField s = xt;
        axpy(-1.0, x, s);
        ScalarField y = et.grad;
        axpy(-1.0, e.grad, y);
        const double sy = volume_dot(s, y);
        if (sy > 1e-16 * volume_norm(s) * volume_norm(y)) {
            hist.emplace_back(std::move(s), std::move(y));
            rhos.push_back(1.0 / sy);
            if (static_cast<int>(hist.size()) > memory) {
                hist.pop_front();
                rhos.pop_front();
            }
        }
        stall = e.objective - et.objective <= 1e-15 * std::abs(e.objective) ? stall + 1 : 0;
        x = std::move(xt);
        e = std::move(et);
        if (stall >= 5) break;
    }
    out.x = std::move(x);
    out.eval = std::move(e);
    return out;
}

std::vector<double> constraint_residuals(const ScalarField& u, const std::vector<ScalarField>& kernel) {
    const ScalarField f = critical_power(u);
    std::vector<double> r;
    for (const auto& k : kernel) r.push_back(std::abs(volume_dot(f, k)));
    return r;
}

}  // namespace

NodalCheck nodal_check(const ScalarField& w, double nodal_tol) {
    const double N = w.grid().critical_exponent();
    NodalCheck out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = std::pow(std::abs(w[i]), N);
        (w[i] > 0.0 ? out.positive_mass : out.negative_mass) += a;
    }
    out.positive_mass *= w.grid().cell_volume();
    out.negative_mass *= w.grid().cell_volume();
    out.tol = std::isfinite(nodal_tol) ? nodal_tol : 1e-8 * (out.positive_mass + out.negative_mass);
    out.nodal = out.positive_mass > out.tol && out.negative_mass > out.tol;
    return out;
}

double concentration_fraction(const ScalarField& w, double top) {
    if (!(top > 0.0 && top <= 1.0)) throw InvalidArgument("concentration fraction must lie in (0, 1]");
    const double N = w.grid().critical_exponent();
    std::vector<double> load(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) load[i] = std::pow(std::abs(w[i]), N);
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top * static_cast<double>(w.size()))));
    std::partial_sort(load.begin(), load.begin() + static_cast<std::ptrdiff_t>(count), load.end(),
                      std::greater<>());
    double head = 0.0;
    for (std::size_t i = 0; i < count; ++i) head += load[i];
    const double total = kernels::sum(load);
    return total > 0.0 ? head / total : 0.0;
}

void annotate(NodalSolution& s, double nodal_tol) {
    const NodalCheck c = nodal_check(s.w, nodal_tol);
    s.positive_mass = c.positive_mass;
    s.negative_mass = c.negative_mass;
    s.nodal = c.nodal;
    s.concentration = concentration_fraction(s.w);
    s.concentrated = s.concentration > 0.5;
}

double functional_I(const OperatorHandle& op, const ScalarField& u) {
    const double n = op.grid().dim();
    const ScalarField lu = op.apply(u);
    const double energy = volume_dot(u, lu);
    if (energy == 0.0) throw InvalidArgument("I is undefined at zero energy");
    const double q = power_integral(lu, 2.0 * n / (n + 2.0));
    return std::pow(q, (n + 2.0) / n) / std::abs(energy);
}

ScalarField functional_I_gradient(const OperatorHandle& op, const ScalarField& u) {
    const double n = op.grid().dim();
    const ScalarField lu = op.apply(u);
    const double energy = volume_dot(u, lu);
    if (energy == 0.0) throw InvalidArgument("I is undefined at zero energy");
    const double q = power_integral(lu, 2.0 * n / (n + 2.0));
    const double value = std::pow(q, (n + 2.0) / n) / std::abs(energy);
    const ScalarField lv = op.apply(dual_field(op, u));
    // d|E| = 2 sign(E) L u.
    const double se = energy > 0.0 ? 1.0 : -1.0;
    ScalarField g(op.grid());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = 2.0 / std::abs(energy) * (std::pow(q, 2.0 / n) * lv[i] - se * value * lu[i]);
    }
    return g;
}

ScalarField dual_field(const OperatorHandle& op, const ScalarField& u) {
    const double n = op.grid().dim();
    // L u accumulated in long double: near the nodal set the fractional power
    // magnifies its rounding error.
    const SparseRowMatrix a = op.matrix();
    ScalarField v(op.grid());
    for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
        long double acc = 0.0L;
        for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
            acc += static_cast<long double>(it.value()) *
                   static_cast<long double>(u[static_cast<std::size_t>(it.col())]);
        }
        v[static_cast<std::size_t>(r)] = signed_pow(static_cast<double>(acc), (n - 2.0) / (n + 2.0));
    }
    return v;
}

double alpha_prime(double alpha, int n) { return -std::pow(alpha, n / (n + 2.0)); }

IgState minimize_I(const OperatorHandle& op, const IgConfig& cfg) {
    const GridSpec& grid = op.grid();
    const double N = grid.critical_exponent();

    IgState st{.u = ScalarField(grid),
               .constraint_residuals = {},
               .trace = {},
               .kernel = detect_kernel(op, cfg.kernel_tol, cfg.seed),
               .start = {}};
    const std::vector<ScalarField>& kernel = st.kernel.basis;
    const RangeSolver rs(op, kernel);

    SolverConfig sc;
    sc.k = 2;
    sc.seed = cfg.seed;
    sc.tol = 1e-10;
    const auto pairs = solve_generalized(make_pencil(op, WeightField::constant(grid)), sc);
    if (!(pairs[0].value < 0.0)) {
        throw InvalidArgument("I needs a negative-energy direction but lambda_1 = " +
                              std::to_string(pairs[0].value));
    }
    // v_1 alone is positive and would lead to the positive solution, a saddle of I.
    ScalarField u0 = pairs[0].vector;
    if (pairs[1].value < 0.0) {
        axpy(1.0, pairs[1].vector, u0);
        st.start = "v1+v2";
    } else {
        st.start = "v1";
    }
    ScalarField v = op.apply(u0);
    for (double& x : v.values()) x = signed_pow(x, 1.0 / (N - 1.0));

    std::vector<double> ramp{0.0};
    if (!kernel.empty()) ramp = {1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
    double i0 = 0.0;
    int counter = 0;
    VEval last(grid);
    for (std::size_t s = 0; s < ramp.size(); ++s) {
        const double rho = ramp[s] * i0;
        const auto fn = [&](const ScalarField& x) { return evaluate_v(rs, kernel, x, rho); };
        if (s == 0) {
            const VEval e0 = evaluate_v(rs, kernel, v, 0.0);
            if (!e0.feasible) throw ConvergenceError("descent start has non-negative energy");
            i0 = e0.I;
        }
        const int budget = std::max(1, (cfg.max_iter - st.iterations) / static_cast<int>(ramp.size() - s));
        LbfgsResult r = lbfgs(fn, std::move(v), budget, cfg.memory, 1e-10, st.trace, counter);
        v = std::move(r.x);
        last = std::move(r.eval);
        st.iterations += r.iterations;
    }

    ScalarField u = rs.solve(rs.project(critical_power(v)), 2);
    ScalarField source = critical_power(v);
    if (cfg.polish) {
        // At a critical point L v = c |v|^(N-2) v with c < 0.
        const double c = volume_dot(v, op.apply(v)) / power_integral(v, N);
        if (c < 0.0) {
            ScalarField w = v;
            const double t = std::pow(-c, 1.0 / (N - 2.0));
            for (double& x : w.values()) x *= t;
            const double wscale = std::max(lp_norm(w, N), 1.0);
            CriticalSolve pol = newton_critical(op, std::move(w), -1.0, 1e-12 * wscale);
            if (pol.converged) {
                ScalarField cand = rs.solve(rs.project(critical_power(pol.w)), 2);
                const double ic = functional_I(op, cand);
                if (volume_dot(cand, op.apply(cand)) < 0.0 && ic <= last.I * (1.0 + 1e-8)) {
                    u = std::move(cand);
                    source = critical_power(pol.w);
                    st.trace.push_back({counter++, ic});
                }
            }
        }
    }

    // Rescale the source rather than u so that the refined solve fixes L u exactly.
    const double energy = volume_dot(u, op.apply(u));
    if (!(energy < 0.0)) throw ConvergenceError("minimizer lost negative energy");
    const double scale = 1.0 / std::sqrt(-energy);
    for (double& x : source.values()) x *= scale;
    u = rs.solve(rs.project(source), 2);
    kernel_correction(u, kernel);
    st.u = std::move(u);
    st.energy = volume_dot(st.u, op.apply(st.u));
    st.alpha = functional_I(op, st.u);
    st.gradient_norm = volume_norm(functional_I_gradient(op, st.u));
    st.constraint_residuals = constraint_residuals(st.u, kernel);
    bool constraints_ok = true;
    for (double r : st.constraint_residuals) constraints_ok = constraints_ok && r <= cfg.constraint_tol;
    st.converged = st.gradient_norm <= cfg.grad_tol && constraints_ok && std::abs(st.energy + 1.0) <= 1e-10;
    return st;
}

DualReport dual_transform(const OperatorHandle& op, const IgState& state, const DualTolerances& tol) {
    const GridSpec& grid = op.grid();
    const int n = grid.dim();
    const double N = grid.critical_exponent();
    const ScalarField lu = op.apply(state.u);
    double lmax = 0.0;
    for (double x : lu.values()) lmax = std::max(lmax, std::abs(x));
    if (lmax == 0.0) throw InvalidArgument("L u vanishes identically");

    DualReport rep{.solution = {.w = ScalarField(grid), .trace = {}},
                   .v = dual_field(op, state.u),
                   .kernel_orthogonality = {},
                   .failure = {}};
    rep.alpha = functional_I(op, state.u);
    rep.alpha_prime = alpha_prime(rep.alpha, n);
    const double q = power_integral(lu, 2.0 * n / (n + 2.0));
    rep.alpha_prime_identity = std::abs(rep.alpha_prime + q) / std::abs(rep.alpha_prime);
    rep.euler_residual = critical_residual(op, rep.v, rep.alpha_prime);
    for (std::size_t i = 0; i < lu.size(); ++i) {
        const double d = std::abs(std::pow(std::abs(rep.v[i]), N - 1.0) - std::abs(lu[i])) / lmax;
        rep.pointwise_residual = std::max(rep.pointwise_residual, d);
        if ((rep.v[i] > 0.0) != (lu[i] > 0.0)) rep.pointwise_residual = std::max(rep.pointwise_residual, 1.0);
    }
    rep.identity_residual = std::abs(functional_I(op, rep.v) - rep.alpha) / rep.alpha;
    rep.kernel_orthogonality = constraint_residuals(rep.v, state.kernel.basis);

    NodalSolution& s = rep.solution;
    s.w = rep.v;
    const double t = std::pow(std::abs(rep.alpha_prime), (n - 2.0) / 4.0);
    for (double& x : s.w.values()) x *= t;
    s.eps_sign = -1;
    s.constant = rep.alpha_prime;
    s.euler_residual = critical_residual(op, s.w, -1.0);
    s.iterations = state.iterations;
    s.trace = state.trace;
    annotate(s);

    std::string fail;
    const auto check = [&](bool ok, const std::string& what) {
        if (!ok) fail += (fail.empty() ? "" : "; ") + what;
    };
    check(rep.euler_residual <= tol.euler, "Euler residual " + std::to_string(rep.euler_residual));
    check(rep.pointwise_residual <= tol.pointwise, "pointwise law " + std::to_string(rep.pointwise_residual));
    check(rep.identity_residual <= tol.identity, "I(v) - alpha " + std::to_string(rep.identity_residual));
    check(rep.alpha_prime_identity <= tol.alpha_prime,
          "alpha' identity " + std::to_string(rep.alpha_prime_identity));
    for (double k : rep.kernel_orthogonality) check(k <= tol.kernel, "kernel pairing " + std::to_string(k));
    check(s.nodal, "v does not change sign");
    s.converged = state.converged && fail.empty();
    rep.passed = fail.empty();
    rep.failure = fail;
    return rep;
}

NodalSolution selfconsistent_mu2(const OperatorHandle& op, const ScalarField& u0,
                                 const SelfConsistentConfig& cfg) {
    const GridSpec& grid = op.grid();
    const double N = grid.critical_exponent();
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
    ScalarField u = u0;
    for (double x : u.values()) {
        if (!(x > 0.0)) throw InvalidArgument("self-consistent iteration needs u0 > 0");
    }
    const double un = lp_norm(u, N);
    for (double& x : u.values()) x /= un;

    SolverConfig sc = cfg.solver;
    sc.k = std::max(sc.k, 3);
    std::vector<ScalarField> warm;
    const auto second = [&](const ScalarField& weight) {
        SolverConfig c = sc;
        if (!warm.empty()) c.warm_start = &warm;
        auto pairs = solve_generalized(make_pencil(op, WeightField(weight)), c);
        if (!(pairs[1].value > 0.0)) {
            throw ConvergenceError("lambda_2(u) reached " + std::to_string(pairs[1].value) +
                                   " during the self-consistent iteration");
        }
        warm.clear();
        for (const auto& p : pairs) warm.push_back(p.vector);
        return pairs;
    };

    NodalSolution sol{.w = ScalarField(grid), .trace = {}};
    bool polished = false;
    std::optional<ScalarField> newton_w;
    std::vector<EigenPair> pairs;
    for (int it = 0;; ++it) {
        pairs = second(u);
        const ScalarField& w = pairs[1].vector;
        const double wn = lp_norm(w, N);
        ScalarField target(grid);
        for (std::size_t i = 0; i < u.size(); ++i) target[i] = std::abs(w[i]) / wn;
        ScalarField diff = u;
        axpy(-1.0, target, diff);
        sol.fixed_point_residual = lp_norm(diff, N);
        sol.trace.push_back({it, sol.fixed_point_residual});
        sol.iterations = it;
        if (sol.fixed_point_residual <= cfg.fp_tol) {
            sol.converged = true;
            break;
        }
        newton_w.reset();
        if (it >= cfg.max_iter) break;

        if (!polished && sol.fixed_point_residual <= cfg.polish_below) {
            // Jump to the nearby solution of L w = |w|^(N-2) w; the next pass
            // re-solves the pencil at u = |w| / ||w||_N and re-measures the residual.
            polished = true;
            ScalarField w1 = w;
            const double t = std::pow(pairs[1].value / std::pow(wn, N - 2.0), 1.0 / (N - 2.0));
            for (double& x : w1.values()) x *= t;
            CriticalSolve pol = newton_critical(op, std::move(w1), 1.0, 1e-12 * std::max(1.0, t));
            if (pol.converged && nodal_check(pol.w).nodal) {
                const double pn = lp_norm(pol.w, N);
                ScalarField cand(grid);
                bool positive = true;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    cand[i] = std::abs(pol.w[i]) / pn;
                    positive = positive && cand[i] > 0.0;
                }
                if (positive) {
                    u = std::move(cand);
                    newton_w = std::move(pol.w);
                    continue;
                }
            }
        }
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = (1.0 - cfg.theta) * u[i] + cfg.theta * target[i];
        const double nn = lp_norm(u, N);
        for (double& x : u.values()) x /= nn;
    }

    const ScalarField& w = pairs[1].vector;
    if (sol.converged && newton_w) {
        // u = |w| / ||w||_N was confirmed as the fixed point; the Newton solution
        // is the same w' without the eigensolver tolerance. Orient it like w_2.
        sol.w = *newton_w;
        if (volume_dot(sol.w, w) < 0.0) {
            for (double& x : sol.w.values()) x = -x;
        }
    } else {
        const double wn = lp_norm(w, N);
        const double t = std::pow(pairs[1].value / std::pow(wn, N - 2.0), 1.0 / (N - 2.0));
        sol.w = w;
        for (double& x : sol.w.values()) x *= t;
    }
    sol.eps_sign = 1;
    sol.constant = pairs[1].value;
    sol.euler_residual = critical_residual(op, sol.w, 1.0);
    annotate(sol);
    return sol;
}

ZeroTuning lambda2_zero_tuning(const GridSpec& grid, const Potential& base, double zero_tol,
                               const SolverConfig& solver) {
    SolverConfig sc = solver;
    sc.k = std::max(sc.k, 3);
    sc.tol = std::min(sc.tol, 1e-10);
    const auto spectrum = [&](const Potential& s) {
        const OperatorHandle op(grid, s);
        return solve_generalized(make_pencil(op, WeightField::constant(grid)), sc);
    };
    const auto p0 = spectrum(base);
    const double lam2 = p0[1].value;
    const double gap = std::min(lam2 - p0[0].value, p0[2].value - lam2);
    if (!(gap > 0.0)) throw InvalidArgument("lambda_2 is not simple; the zero branch needs a simple eigenvalue");

    ZeroTuning out{.potential = base.shifted(-lam2), .kernel = {}, .solution = {.w = ScalarField(grid), .trace = {}}};
    out.lambda2_base = lam2;
    out.shift = -lam2;

    // lambda_2(S + c) = lambda_2(S) + c, so the symmetric bracket's midpoint is the root.
    const double lo = out.shift - 0.5 * gap;
    const double hi = out.shift + 0.5 * gap;
    if (!(spectrum(base.shifted(lo))[1].value < 0.0 && spectrum(base.shifted(hi))[1].value > 0.0)) {
        throw ConvergenceError("bracket around the zero of lambda_2 failed");
    }
    out.bisection_shift = 0.5 * (lo + hi);
    out.bisection_steps = 1;

    const OperatorHandle op(grid, out.potential);
    const auto p1 = solve_generalized(make_pencil(op, WeightField::constant(grid)), sc);
    out.lambda2_tuned = p1[1].value;
    if (!(std::abs(out.lambda2_tuned) <= zero_tol)) {
        throw ConvergenceError("tuned lambda_2 = " + std::to_string(out.lambda2_tuned) + " misses the zero tolerance");
    }
    out.kernel = detect_kernel(op, std::numeric_limits<double>::quiet_NaN(), sc.seed);

    NodalSolution& s = out.solution;
    s.w = p1[1].vector;
    s.eps_sign = 0;
    s.constant = out.lambda2_tuned;
    s.euler_residual = critical_residual(op, s.w, 0.0);
    s.converged = true;
    annotate(s);
    return out;
}

}  // namespace yamabe
