// SPDX-License-Identifier: Apache-2.0
#include "yamabe/invariants.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "yamabe/aubin.hpp"
#include "yamabe/critical.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/fourier.hpp"
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

// Rescales u so that integral |u|^N = 1.
void normalize_critical(ScalarField& u) {
    const double norm = lp_norm(u, u.grid().critical_exponent());
    if (!(norm > 0.0)) throw ConvergenceError("iterate vanished identically");
    for (double& v : u.values()) v /= norm;
}

// tau (c_n Delta_h + tau)^-1 with tau the first nonzero continuum symbol:
// identity on constants, smoothing on short waves.
class SobolevPreconditioner {
public:
    explicit SobolevPreconditioner(const OperatorHandle& op)
        : solver_(op.grid(), op.stencil_scale()) {
        const double k1 = 2.0 * std::numbers::pi / op.grid().period();
        tau_ = op.grid().conformal_constant() * k1 * k1;
    }
    ScalarField apply(const ScalarField& g) const {
        ScalarField out(g.grid());
        solver_.solve(tau_, g.values(), out.values());
        for (double& v : out.values()) v *= tau_;
        return out;
    }

private:
    PeriodicLaplacianSolver solver_;
    double tau_ = 1.0;
};

Pencil weighted_pencil(const OperatorHandle& op, const ScalarField& u) {
    return make_pencil(op, WeightField(u));
}

}  // namespace

double yamabe_functional(const OperatorHandle& op, const ScalarField& u) {
    const double norm = lp_norm(u, op.grid().critical_exponent());
    if (!(norm > 0.0)) throw InvalidArgument("Yamabe functional of the zero function");
    return op.energy(u) / (norm * norm);
}

InvariantEstimate estimate_mu(const OperatorHandle& op, const MuConfig& cfg) {
    const GridSpec& grid = op.grid();
    const double N = grid.critical_exponent();
    const SobolevPreconditioner pre(op);

    ScalarField u = random_smooth_field(grid, cfg.seed ^ 0x6d75, 2);
    for (double& v : u.values()) v = 1.0 + 0.3 * v;
    normalize_critical(u);

    const auto euler_residual = [&](const ScalarField& x, double yx) {
        ScalarField g = op.apply(x);
        for (std::size_t i = 0; i < x.size(); ++i) g[i] -= yx * std::pow(std::abs(x[i]), N - 2.0) * x[i];
        return g;
    };

    InvariantEstimate est{.minimizer = u, .trace = {}};
    double y = op.gradient_energy(u);
    double step = 1.0;
    int flat_steps = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        est.trace.push_back({it, y});
        // Half the gradient of Y at ||u||_N = 1.
        const ScalarField g = euler_residual(u, y);
        est.residual = volume_norm(g);
        if (est.residual <= std::max(cfg.tol, cfg.newton_switch)) break;
        const ScalarField d = pre.apply(g);
        const double slope = 2.0 * volume_dot(g, d);
        double umax = 0.0, dmax = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            umax = std::max(umax, std::abs(u[i]));
            dmax = std::max(dmax, std::abs(d[i]));
        }
        step = std::min(step, 0.5 * umax / dmax);

        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
            ScalarField trial(grid);
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = std::max(u[i] - step * d[i], 0.0);
            if (!(lp_norm(trial, N) > 0.0)) continue;
            normalize_critical(trial);
            const double yt = op.gradient_energy(trial);
            if (yt <= y - 1e-4 * step * slope) {
                flat_steps = y - yt <= 1e-14 * std::max(std::abs(y), 1.0) ? flat_steps + 1 : 0;
                u = std::move(trial);
                y = yt;
                accepted = true;
                break;
            }
        }
        if (!accepted || flat_steps >= 20) break;
        step *= 4.0;
    }

    // Newton on the Euler equation from the descent point: w = |y|^(1/(N-2)) u
    // solves apply(w) = sign(y) w^(N-1) exactly when u is critical.
    const double scale = std::max(op.norm_bound(), 1.0);
    if (est.residual > cfg.tol && std::abs(y) > 1e-12 * scale) {
        const double sign = y > 0.0 ? 1.0 : -1.0;
        ScalarField w = u;
        const double t = std::pow(std::abs(y), 1.0 / (N - 2.0));
        for (double& v : w.values()) v *= t;
        CriticalSolve polished = newton_critical(op, std::move(w), sign, 1e-12 * t);
        double wmin = 0.0;
        for (double v : polished.w.values()) wmin = std::min(wmin, v);
        if (polished.converged && wmin >= 0.0) {
            ScalarField cand = std::move(polished.w);
            normalize_critical(cand);
            const double yc = op.gradient_energy(cand);
            const double rc = volume_norm(euler_residual(cand, yc));
            if (yc <= y + 1e-12 * std::abs(y) && rc < est.residual) {
                u = std::move(cand);
                y = yc;
                est.residual = rc;
                est.trace.push_back({static_cast<int>(est.trace.size()), y});
            }
        }
    }
    est.value = y;
    est.minimizer = u;
    est.converged = est.residual <= cfg.tol;
    return est;
}

double lambda_weighted(const OperatorHandle& op, const WeightField& u, int i,
                       const SolverConfig& cfg) {
    if (i < 1) throw InvalidArgument("eigenvalue index starts at 1");
    if (!u.strictly_positive()) {
        throw SingularMassError("weight has zeros; use neg_inf_certificate");
    }
    SolverConfig c = cfg;
    c.k = std::max(c.k, i);
    return solve_generalized(make_pencil(op, u), c)[static_cast<std::size_t>(i - 1)].value;
}

double mu2_objective(const OperatorHandle& op, const WeightField& u, const SolverConfig& cfg) {
    const double n = op.grid().dim();
    return lambda_weighted(op, u, 2, cfg) *
           std::pow(power_integral(u.field(), op.grid().critical_exponent()), 2.0 / n);
}

ScalarField mu2_gradient(const OperatorHandle& op, const ScalarField& u,
                         const std::vector<EigenPair>& pairs, double cluster_gap) {
    if (pairs.size() < 2) throw InvalidArgument("mu2 gradient needs two eigenpairs");
    const GridSpec& grid = op.grid();
    const double N = grid.critical_exponent();
    const double n = grid.dim();
    const double lam = pairs[1].value;
    const double tol = cluster_gap * std::max(1.0, std::abs(lam));
    std::vector<const EigenPair*> cluster;
    for (std::size_t j = 1; j < pairs.size(); ++j) {
        if (std::abs(pairs[j].value - lam) <= tol) cluster.push_back(&pairs[j]);
    }
    const double p = power_integral(u, N);
    const double scale = std::pow(p, 2.0 / n) * lam * (N - 2.0);
    ScalarField g(grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
        double v2 = 0.0;
        for (const EigenPair* e : cluster) v2 += e->vector[i] * e->vector[i];
        v2 /= static_cast<double>(cluster.size());
        g[i] = scale * (std::pow(u[i], N - 1.0) / p - std::pow(u[i], N - 3.0) * v2);
    }
    return g;
}

Mu2Estimate mu2_optimize(const OperatorHandle& op, const Mu2Config& cfg) {
    const GridSpec& grid = op.grid();
    const double N = grid.critical_exponent();
    const double n = grid.dim();
    const SobolevPreconditioner pre(op);

    SolverConfig solver = cfg.solver;
    solver.k = std::max(solver.k, 4);
    std::vector<ScalarField> warm;

    const auto solve = [&](const ScalarField& u) {
        SolverConfig c = solver;
        if (!warm.empty()) c.warm_start = &warm;
        auto pairs = solve_generalized(weighted_pencil(op, u), c);
        if (!(pairs[1].value > 0.0)) {
            throw ConvergenceError("lambda_2(u) reached " + std::to_string(pairs[1].value) +
                                   "; the second invariant is unbounded below in this regime");
        }
        return pairs;
    };
    const auto objective = [&](const ScalarField& u, double lam) {
        return lam * std::pow(power_integral(u, N), 2.0 / n);
    };

    ScalarField u(grid, 1.0);
    normalize_critical(u);
    auto pairs = solve(u);
    double f = objective(u, pairs[1].value);

    Mu2Estimate out{.estimate = {.minimizer = u, .trace = {}}};
    out.initial_value = f;
    double step = 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        out.estimate.trace.push_back({it, f});
        const ScalarField g = mu2_gradient(op, u, pairs, cfg.cluster_gap);
        const ScalarField d = pre.apply(g);
        const double slope = volume_dot(g, d);
        out.estimate.residual = volume_norm(g);
        double umean = 0.0, umax = 0.0, dmax = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            umean += u[i];
            umax = std::max(umax, u[i]);
            dmax = std::max(dmax, std::abs(d[i]));
        }
        umean /= static_cast<double>(u.size());
        if (!(dmax > 0.0)) {
            out.estimate.converged = true;
            break;
        }
        step = std::min(step, 0.5 * umax / dmax);
        const double floor = cfg.u_floor * umean;

        bool accepted = false;
        for (int bt = 0; bt < 25; ++bt, step *= 0.5) {
            ScalarField trial(grid);
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = std::max(u[i] - step * d[i], floor);
            normalize_critical(trial);
            warm.clear();
            for (const auto& pr : pairs) warm.push_back(pr.vector);
            auto tp = solve(trial);
            const double ft = objective(trial, tp[1].value);
            if (ft <= f - 1e-4 * step * slope) {
                const bool small = f - ft <= cfg.rel_tol * std::abs(f);
                u = std::move(trial);
                pairs = std::move(tp);
                f = ft;
                accepted = true;
                if (small) out.estimate.converged = true;
                break;
            }
        }
        if (!accepted) {
            out.estimate.converged = true;
            break;
        }
        if (out.estimate.converged) break;
        step *= 2.0;
    }
    out.estimate.trace.push_back({static_cast<int>(out.estimate.trace.size()), f});
    out.estimate.value = f;
    out.estimate.minimizer = u;
    out.sphere_threshold = mu_sn_constant(grid.dim());
    out.below_sphere = f < out.sphere_threshold;
    return out;
}

int sign_of(double value, double zero_tol) {
    if (std::abs(value) <= zero_tol) return 0;
    return value > 0.0 ? 1 : -1;
}

SignInvarianceReport sign_invariance_experiment(const OperatorHandle& op, int i_max, int trials,
                                                std::uint64_t seed, const SolverConfig& solver) {
    if (i_max < 1 || trials < 0) throw InvalidArgument("sign experiment needs i_max >= 1, trials >= 0");
    const GridSpec& grid = op.grid();
    SolverConfig cfg = solver;
    cfg.k = std::max(cfg.k, i_max);

    SignInvarianceReport rep;
    const Pencil base = make_pencil(op, WeightField::constant(grid));
    rep.kernel_tol = 1e-8 * norm_estimate(base.stiffness);
    for (const auto& p : solve_generalized(base, cfg)) {
        if (p.index <= i_max) rep.reference.push_back(p.value);
    }
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t ts = seed * 1000003ULL + static_cast<std::uint64_t>(t) * 2 + 1;
        const ScalarField u = random_positive_weight(grid, ts);
        const ScalarField phi = random_positive_weight(grid, ts + 1, 0.3);

        const auto pairs = solve_generalized(make_pencil(op, WeightField(u)), cfg);
        bool flipped = false;
        for (int i = 0; i < i_max; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            // Weighted eigenvalues scale with the weight, so the zero threshold does too.
            if (sign_of(pairs[ii].value, rep.kernel_tol) != sign_of(rep.reference[ii], rep.kernel_tol)) {
                flipped = true;
            }
        }
        if (flipped) {
            ++rep.sign_flips;
            if (rep.witness_seed == 0) rep.witness_seed = ts;
        }

        ScalarField uphi(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) uphi[i] = u[i] * phi[i];
        const auto g_side = solve_generalized(make_pencil(op, WeightField(uphi)), cfg);
        const auto c_side =
            solve_generalized(make_conformal_pencil(conformal_push(op, phi), WeightField(u)), cfg);
        for (int i = 0; i < i_max; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double r = std::abs(g_side[ii].value - c_side[ii].value) /
                             std::max(std::abs(g_side[ii].value), 1.0);
            rep.max_covariance_residual = std::max(rep.max_covariance_residual, r);
        }
    }
    rep.passed = rep.sign_flips == 0 && rep.max_covariance_residual <= 1e-10;
    return rep;
}

NegativeLambdaK construct_negative_lambda_k(const GridSpec& grid, int k, double depth,
                                            double radius, double delta,
                                            const SolverConfig& solver) {
    NegativeLambdaK out{.potential = Potential::wells(grid, k, radius, depth), .test_quotients = {}};
    const OperatorHandle op(grid, out.potential);
    const Pencil unit = make_pencil(op, WeightField::constant(grid));
    SolverConfig cfg = solver;
    cfg.k = std::max(cfg.k, k);
    out.lambda_k = solve_generalized(unit, cfg)[static_cast<std::size_t>(k - 1)].value;

    // Ball radius: half the center spacing minus 1.5 h, so the supports are
    // more than one stencil step apart.
    int q = 1;
    while (std::pow(static_cast<double>(q), grid.dim()) < k) ++q;
    const double rho = 0.5 * grid.period() / q - 1.5 * grid.spacing();
    std::vector<ScalarField> tests;
    for (const auto& c : out.potential.centers) {
        Pencil ball = unit;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ball.mass[i] = periodic_distance_to(grid, i, c) <= rho ? 1.0 : 0.0;
        }
        SolverConfig bc;
        bc.k = 1;
        bc.tol = 1e-10;
        bc.seed = solver.seed;
        bc.restrict_to_support = true;
        bc.dense_threshold = solver.dense_threshold;
        auto pr = solve_generalized(ball, bc);
        tests.push_back(std::move(pr[0].vector));
    }

    const auto kk = static_cast<Eigen::Index>(tests.size());
    Eigen::MatrixXd e(kk, kk), g(kk, kk);
    std::vector<ScalarField> applied;
    for (const auto& t : tests) applied.push_back(op.apply(t));
    for (Eigen::Index i = 0; i < kk; ++i) {
        for (Eigen::Index j = 0; j < kk; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            e(i, j) = kernels::dot(applied[a].values(), tests[b].values());
            g(i, j) = kernels::dot(tests[a].values(), tests[b].values());
            if (i != j) out.max_offdiag = std::max({out.max_offdiag, std::abs(e(i, j)), std::abs(g(i, j))});
        }
        out.test_quotients.push_back(e(i, i) / g(i, i));
    }
    out.projected_bound = subspace_sup(unit, tests);
    out.verified = out.lambda_k < 0.0 && out.projected_bound < -delta && out.max_offdiag == 0.0 &&
                   out.lambda_k <= out.projected_bound + 1e-9 * std::max(1.0, std::abs(out.projected_bound));
    return out;
}

Prop51Report demo_prop51(const OperatorHandle& op, const std::vector<double>& eps_list,
                         double delta, const SolverConfig& solver) {
    const GridSpec& grid = op.grid();
    const int n = grid.dim();
    const double N = grid.critical_exponent();
    if (!(2.0 * delta < 0.5 * grid.period())) throw InvalidArgument("cutoff ball wraps around the torus");

    Prop51Report rep;
    SolverConfig cfg = solver;
    cfg.k = std::max(cfg.k, 2);
    const auto pairs = solve_generalized(make_pencil(op, WeightField::constant(grid)), cfg);
    rep.lambda2 = pairs[1].value;
    if (!(rep.lambda2 < 0.0)) {
        throw InvalidArgument("demo needs lambda_2(1) < 0, got " + std::to_string(rep.lambda2));
    }

    // Center: the grid point farthest from every well (or from the minimum of S).
    std::vector<std::vector<double>> avoid = op.potential().centers;
    if (avoid.empty()) {
        const auto s = op.potential().field.values();
        avoid.push_back(grid.position(static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin())));
    }
    std::size_t center = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& a : avoid) d = std::min(d, periodic_distance_to(grid, i, a));
        if (d > best) {
            best = d;
            center = i;
        }
    }
    rep.center = grid.position(center);
    const double reach = op.potential().regime == Potential::Regime::Wells
                             ? op.potential().well_radius + 2.0 * delta
                             : 2.0 * delta;
    if (best < reach) rep.warning = "weight support comes within reach of the potential wells";

    const std::vector<ScalarField> span{pairs[0].vector, pairs[1].vector};
    Eigen::Matrix2d e;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            e(i, j) = op.energy(span[static_cast<std::size_t>(i)], span[static_cast<std::size_t>(j)]);
        }
    }
    e = 0.5 * (e + e.transpose()).eval();

    // Distinct |k|^2 of the grid modes, |k_a| <= m/2.
    const int m = grid.points_per_axis();
    const double k0 = 2.0 * std::numbers::pi / grid.period();
    const auto wrap = [m](int j) { return j <= m / 2 ? j : j - m; };
    const std::vector<int> center_idx = grid.multi_index(center);

    for (double eps : eps_list) {
        const TestFnSpec spec = build_v_eps({.n = n, .eps = eps, .delta = delta, .center = rep.center});
        const auto weight = [&](double r) { return std::pow(v_eps_profile(spec, r), N - 2.0); };
        const double mass0 = radial_integral(n, eps, delta, weight);
        // Fourier transform of the radial weight at |k|^2 = k2 (lattice units).
        std::vector<double> hat(static_cast<std::size_t>(n * (m / 2) * (m / 2) + 1),
                                std::numeric_limits<double>::quiet_NaN());
        const double nu = 0.5 * n - 1.0;
        const auto transform = [&](int k2) {
            double& slot = hat[static_cast<std::size_t>(k2)];
            if (!std::isnan(slot)) return slot;
            const double kappa = k0 * std::sqrt(static_cast<double>(k2));
            slot = radial_integral(n, eps, delta, [&](double r) {
                const double z = kappa * r;
                const double kernel = z < 1e-8 ? 1.0
                                               : std::tgamma(nu + 1.0) * std::pow(2.0 / z, nu) *
                                                     std::cyl_bessel_j(nu, z);
                return weight(r) * kernel;
            }, 1e-10, 1e-12 * mass0);
            return slot;
        };
        // Weight projected onto the grid modes and sampled on the grid,
        // centered at index 0 and then shifted to the chosen center.
        std::vector<double> coef(grid.size());
        for (std::size_t q = 0; q < grid.size(); ++q) {
            const auto mi = grid.multi_index(q);
            int k2 = 0;
            for (int a = 0; a < n; ++a) {
                const int j = wrap(mi[static_cast<std::size_t>(a)]);
                k2 += j * j;
            }
            coef[q] = transform(k2) / grid.volume();
        }
        const std::vector<double> w0 = even_synthesis(grid, coef);
        ScalarField w(grid);
        std::vector<int> shifted(static_cast<std::size_t>(n));
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const auto pi = grid.multi_index(p);
            for (int a = 0; a < n; ++a) {
                const auto aa = static_cast<std::size_t>(a);
                shifted[aa] = ((pi[aa] - center_idx[aa]) % m + m) % m;
            }
            w[p] = w0[grid.flat_index(shifted)];
        }

        Eigen::Matrix2d gm;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const auto& a = span[static_cast<std::size_t>(i)];
                const auto& b = span[static_cast<std::size_t>(j)];
                gm(i, j) = grid.cell_volume() * kernels::weighted_dot(w.values(), a.values(), b.values());
            }
        }
        gm = 0.5 * (gm + gm.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(e, gm, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) {
            throw CertificateError("projected weight matrix is not positive definite at eps " +
                                   std::to_string(eps));
        }
        rep.rows.push_back({eps, es.eigenvalues().maxCoeff()});
    }
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const bool finer = rep.rows[i].eps < rep.rows[i - 1].eps;
        if (finer && !(rep.rows[i].value < rep.rows[i - 1].value)) rep.decreasing = false;
    }
    return rep;
}

}  // namespace yamabe
