// SPDX-License-Identifier: Apache-2.0
#include "yamabe/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include "yamabe/aubin.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/field_io.hpp"
#include "yamabe/invariants.hpp"
#include "yamabe/nodal.hpp"

namespace yamabe {
namespace {

namespace fs = std::filesystem;

struct Run {
    const RunConfig& cfg;
    const CommandOptions& opts;
    RunRecord& rec;
    GridSpec grid;

    void log(const std::string& msg) const {
        if (opts.log) opts.log(msg);
    }

    fs::path file(const std::string& stem) const {
        return fs::path(cfg.output.dir) / (rec.command + "-" + rec.config_hash.substr(0, 8) + "-" + stem);
    }

    void field(const std::string& stem, const ScalarField& f) const {
        if (!opts.persist_files) return;
        const fs::path p = file(stem + ".yamf");
        fs::create_directories(p.parent_path());
        write_yamf(p, f);
        rec.files.push_back(p.string());
    }

    OperatorHandle op() const { return OperatorHandle(grid, Potential::parse(grid, cfg.model.potential)); }

    SolverConfig solver(int k) const {
        SolverConfig s;
        s.k = k;
        s.tol = cfg.solver.tol;
        s.max_iter = cfg.solver.max_iter;
        s.seed = cfg.solver.seed;
        return s;
    }
};

std::vector<double> objectives(const std::vector<TracePoint>& trace) {
    std::vector<double> out;
    out.reserve(trace.size());
    for (const auto& t : trace) out.push_back(t.objective);
    return out;
}

std::string sign_label(int s) { return s > 0 ? "+1" : (s < 0 ? "-1" : "0"); }

void record_solution(RunRecord& rec, const NodalSolution& s) {
    rec.labels["eps_sign"] = sign_label(s.eps_sign);
    rec.labels["nodal"] = s.nodal ? "true" : "false";
    rec.labels["concentrated"] = s.concentrated ? "true" : "false";
    rec.scalars["positive_mass"] = s.positive_mass;
    rec.scalars["negative_mass"] = s.negative_mass;
    rec.scalars["concentration"] = s.concentration;
    rec.scalars["iterations"] = s.iterations;
    rec.residuals["euler"] = s.euler_residual;
}

bool has_zero(const WeightField& u) {
    for (double v : u.field().values()) {
        if (v == 0.0) return true;
    }
    return false;
}

void cmd_spectrum(Run& r) {
    const OperatorHandle op = r.op();
    const WeightField u = parse_weight(r.grid, r.cfg.model.weight);
    const Pencil pencil = make_pencil(op, u);
    r.rec.labels["weight"] = r.cfg.model.weight;
    if (has_zero(u)) {
        const NegInfCertificate cert = neg_inf_certificate(pencil, r.cfg.solver.seed);
        r.rec.labels["weight_regime"] = "degenerate";
        r.rec.labels["lambda_1"] = cert.found ? "-inf" : "finite";
        r.rec.scalars["zero_set_size"] = static_cast<double>(cert.zero_set_size);
        r.rec.scalars["restricted_eigenvalue"] = cert.restricted_eigenvalue;
        if (cert.found) {
            r.rec.scalars["witness_energy"] = cert.energy;
            const auto seq = divergence_sequence(pencil, cert.direction, r.cfg.demo.alphas);
            for (std::size_t i = 0; i < seq.size(); ++i) {
                r.rec.scalars["divergence_" + std::to_string(i)] = seq[i];
            }
            r.rec.trace = summarize_trace(seq);
            r.field("witness", cert.direction);
            return;
        }
        throw SingularMassError("weight has zeros but no negative-energy witness; lambda_1 is finite "
                                "and the pencil needs a support restriction");
    }
    const auto pairs = solve_generalized(pencil, r.solver(r.cfg.solver.k));
    double gram = 0.0;
    const auto g = mass_gram(pencil, pairs);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) gram = std::max(gram, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));
    }
    double worst = 0.0;
    for (const auto& p : pairs) {
        r.rec.scalars["lambda_" + std::to_string(p.index)] = p.value;
        worst = std::max(worst, p.residual);
        r.field("v" + std::to_string(p.index), p.vector);
    }
    r.rec.residuals["eigen_max"] = worst;
    r.rec.residuals["gram"] = gram;
    const MinmaxReport mm = minmax_certificate(pencil, pairs, 20, r.cfg.solver.seed);
    r.rec.labels["minmax"] = mm.passed ? "pass" : "fail";
    if (!mm.passed) throw CertificateError("min-max certificate failed on the computed pairs");
}

void cmd_mu(Run& r) {
    const OperatorHandle op = r.op();
    MuConfig mc;
    mc.max_iter = r.cfg.mu.max_iter;
    mc.tol = r.cfg.mu.tol;
    mc.seed = r.cfg.solver.seed;
    const InvariantEstimate est = estimate_mu(op, mc);
    r.rec.scalars["mu"] = est.value;
    r.rec.residuals["euler"] = est.residual;
    r.rec.trace = summarize_trace(objectives(est.trace));
    const double lambda1 = lambda_weighted(op, WeightField::constant(r.grid), 1, r.solver(1));
    r.rec.scalars["lambda_1"] = lambda1;
    const double ztol = 1e-8 * std::max(1.0, op.norm_bound());
    r.rec.labels["sign_matches_lambda_1"] = sign_of(est.value, ztol) == sign_of(lambda1, ztol) ? "true" : "false";
    r.field("minimizer", est.minimizer);
    if (!est.converged) throw ConvergenceError("estimate_mu stopped at residual " + std::to_string(est.residual));
}

void cmd_mu2(Run& r) {
    const OperatorHandle op = r.op();
    Mu2Config mc;
    mc.max_iter = r.cfg.mu2.max_iter;
    mc.u_floor = r.cfg.mu2.u_floor;
    mc.rel_tol = r.cfg.mu2.rel_tol;
    mc.solver = r.solver(2);
    const Mu2Estimate est = mu2_optimize(op, mc);
    r.rec.scalars["mu2"] = est.estimate.value;
    r.rec.scalars["initial"] = est.initial_value;
    r.rec.scalars["sphere_threshold"] = est.sphere_threshold;
    r.rec.labels["below_sphere"] = est.below_sphere ? "true" : "false";
    r.rec.trace = summarize_trace(objectives(est.estimate.trace));
    r.field("weight", est.estimate.minimizer);
}

void cmd_nodal_pos(Run& r) {
    const OperatorHandle op = r.op();
    SelfConsistentConfig sc;
    sc.theta = r.cfg.nodal.theta;
    sc.fp_tol = r.cfg.nodal.fp_tol;
    sc.max_iter = r.cfg.nodal.max_iter;
    sc.solver = r.solver(2);
    const NodalSolution s = selfconsistent_mu2(op, ScalarField(r.grid, 1.0), sc);
    record_solution(r.rec, s);
    r.rec.scalars["mu2"] = s.constant;
    r.rec.residuals["fixed_point"] = s.fixed_point_residual;
    r.rec.trace = summarize_trace(objectives(s.trace));
    r.field("w", s.w);
    if (!s.converged) throw ConvergenceError("self-consistent iteration did not reach fp_tol");
}

void cmd_nodal_zero(Run& r) {
    SolverConfig sc = r.solver(3);
    const ZeroTuning z = lambda2_zero_tuning(r.grid, Potential::parse(r.grid, r.cfg.model.potential),
                                             r.cfg.nodal.zero_tol, sc);
    record_solution(r.rec, z.solution);
    r.rec.scalars["shift"] = z.shift;
    r.rec.scalars["lambda2_base"] = z.lambda2_base;
    r.rec.scalars["lambda2_tuned"] = z.lambda2_tuned;
    r.rec.scalars["kernel_dim"] = static_cast<double>(z.kernel.basis.size());
    r.field("w", z.solution.w);
    r.field("potential", z.potential.field);
    if (!(std::abs(z.lambda2_tuned) <= r.cfg.nodal.zero_tol)) {
        throw CertificateError("tuned lambda_2 misses zero_tol");
    }
}

void cmd_nodal_neg(Run& r) {
    const OperatorHandle op = r.op();
    IgConfig ic;
    ic.max_iter = r.cfg.nodal.ig_max_iter;
    ic.grad_tol = r.cfg.nodal.grad_tol;
    ic.constraint_tol = r.cfg.nodal.constraint_tol;
    ic.seed = r.cfg.solver.seed;
    const IgState st = minimize_I(op, ic);
    DualTolerances tol;
    tol.kernel = r.cfg.nodal.constraint_tol;
    const DualReport d = dual_transform(op, st, tol);
    record_solution(r.rec, d.solution);
    r.rec.labels["start"] = st.start;
    r.rec.scalars["alpha"] = d.alpha;
    r.rec.scalars["alpha_prime"] = d.alpha_prime;
    r.rec.scalars["kernel_dim"] = static_cast<double>(st.kernel.basis.size());
    r.rec.residuals["energy_constraint"] = std::abs(st.energy + 1.0);
    r.rec.residuals["gradient"] = st.gradient_norm;
    r.rec.residuals["dual_euler"] = d.euler_residual;
    r.rec.residuals["alpha_prime_identity"] = d.alpha_prime_identity;
    r.rec.residuals["I_identity"] = d.identity_residual;
    double kmax = 0.0;
    for (double c : st.constraint_residuals) kmax = std::max(kmax, c);
    r.rec.residuals["kernel_constraint"] = kmax;
    r.rec.trace = summarize_trace(objectives(st.trace));
    r.field("u", st.u);
    r.field("v", d.v);
    if (!st.converged) throw ConvergenceError("minimize_I stopped with gradient " + std::to_string(st.gradient_norm));
    if (!d.passed) throw CertificateError("dual transform: " + d.failure);
}

void cmd_demo_prop21(Run& r) {
    const double radius = r.cfg.demo.well_radius;
    const Potential pot = Potential::wells(r.grid, 1, radius, r.cfg.demo.well_depth);
    const OperatorHandle op(r.grid, pot);
    // the weight lives in a ball around the antipode of the well
    std::vector<double> far = pot.centers.at(0);
    for (double& x : far) x = std::fmod(x + 0.5 * r.grid.period(), r.grid.period());
    const ScalarField bump = ball_bump(r.grid, far, 0.5 * radius, radius);
    const Pencil degenerate = make_pencil(op, WeightField(bump));
    const NegInfCertificate cert = neg_inf_certificate(degenerate, r.cfg.solver.seed);
    r.rec.labels["witness_found"] = cert.found ? "true" : "false";
    r.rec.scalars["zero_set_size"] = static_cast<double>(cert.zero_set_size);
    r.rec.scalars["witness_energy"] = cert.energy;
    r.rec.scalars["restricted_eigenvalue"] = cert.restricted_eigenvalue;
    if (!cert.found) throw CertificateError("no negative-energy witness on the zero set of the weight");
    double witness_mass = 0.0;
    for (std::size_t i = 0; i < degenerate.size(); ++i) {
        witness_mass += degenerate.mass[i] * cert.direction[i] * cert.direction[i];
    }
    r.rec.residuals["witness_mass"] = witness_mass * degenerate.cell_volume;
    const auto seq = divergence_sequence(degenerate, cert.direction, r.cfg.demo.alphas);
    for (std::size_t i = 0; i < seq.size(); ++i) r.rec.scalars["divergence_" + std::to_string(i)] = seq[i];
    r.rec.trace = summarize_trace(seq);
    r.field("witness", cert.direction);

    ScalarField lifted = bump;
    for (double& v : lifted.values()) v += 0.1;
    const Pencil positive = make_pencil(op, WeightField(lifted));
    const NegInfCertificate none = neg_inf_certificate(positive, r.cfg.solver.seed);
    r.rec.labels["positive_weight_found"] = none.found ? "true" : "false";
    const auto pairs = solve_generalized(positive, r.solver(r.cfg.solver.k));
    bool finite = true;
    for (const auto& p : pairs) {
        finite = finite && std::isfinite(p.value);
        r.rec.scalars["positive_lambda_" + std::to_string(p.index)] = p.value;
    }
    r.rec.labels["positive_weight_finite"] = finite ? "true" : "false";
    if (none.found || !finite) throw CertificateError("positive weight produced a witness or a non-finite eigenvalue");
}

void cmd_demo_prop51(Run& r) {
    const OperatorHandle op = r.op();
    const Prop51Report rep = demo_prop51(op, r.cfg.demo.eps_list, r.cfg.demo.delta, r.solver(2));
    r.rec.scalars["lambda2"] = rep.lambda2;
    std::vector<double> values;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        r.rec.scalars["value_" + std::to_string(i)] = rep.rows[i].value;
        r.rec.scalars["eps_" + std::to_string(i)] = rep.rows[i].eps;
        values.push_back(rep.rows[i].value);
    }
    r.rec.trace = summarize_trace(values);
    r.rec.labels["decreasing"] = rep.decreasing ? "true" : "false";
    if (!rep.warning.empty()) r.rec.labels["warning"] = rep.warning;
}

void cmd_lak(Run& r) {
    const NegativeLambdaK res = construct_negative_lambda_k(r.grid, r.cfg.lak.k, r.cfg.lak.depth, r.cfg.lak.radius,
                                                            r.cfg.lak.delta, r.solver(r.cfg.lak.k));
    r.rec.scalars["lambda_k"] = res.lambda_k;
    r.rec.scalars["projected_bound"] = res.projected_bound;
    r.rec.residuals["max_offdiag"] = res.max_offdiag;
    for (std::size_t i = 0; i < res.test_quotients.size(); ++i) {
        r.rec.scalars["test_quotient_" + std::to_string(i + 1)] = res.test_quotients[i];
    }
    r.rec.labels["verified"] = res.verified ? "true" : "false";
    r.field("potential", res.potential.field);
    if (!res.verified) throw CertificateError("projected bound is not negative");
}

void cmd_aubin(Run& r) {
    const auto& a = r.cfg.aubin;
    std::vector<ScalingReport> reports;
    for (double p : a.p_list) {
        reports.push_back(scaling_check(a.n, p, a.eps_list, a.delta));
        const auto& rep = reports.back();
        char buf[32];
        const std::string key = "p" + std::string(buf, std::to_chars(buf, buf + sizeof buf, p).ptr);
        r.rec.scalars["slope_" + key] = rep.fitted_slope;
        r.rec.labels["verdict_" + key] = rep.verdict;
    }
    reports.push_back(c_eps_scaling(a.n, a.c_eps_list, a.delta));
    r.rec.scalars["slope_c_eps"] = reports.back().fitted_slope;
    r.rec.labels["verdict_c_eps"] = reports.back().verdict;
    const auto ylim = y_limit_check(a.n, a.eps_list, a.delta);
    std::vector<double> ys;
    for (const auto& row : ylim) ys.push_back(row.value);
    if (!ys.empty()) r.rec.scalars["Y_smallest_eps"] = ys.front();
    r.rec.scalars["mu_sphere"] = mu_sn_constant(a.n);
    r.rec.trace = summarize_trace(ys);
    if (r.opts.persist_files) {
        const fs::path p = r.file("scaling.csv");
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        write_scaling_csv(out, reports);
        if (!out) throw Error("cannot write " + p.string());
        r.rec.files.push_back(p.string());
    }
}

const std::map<std::string, std::string>& anchors() {
    static const std::map<std::string, std::string> m{
        {"spectrum", "min-max eigenvalues of the conformal Laplacian against a weighted mass"},
        {"mu", "Yamabe invariant as the infimum of the Yamabe functional; sign agrees with lambda_1"},
        {"mu2", "second Yamabe invariant as the infimum of weighted lambda_2"},
        {"nodal-pos", "nodal solution, branch eps=+1 when lambda_2 > 0"},
        {"nodal-zero", "nodal solution, branch eps=0 when lambda_2 = 0"},
        {"nodal-neg", "nodal solution, branch eps=-1 when lambda_2 < 0, through the dual functional"},
        {"demo-prop21", "lambda_1 = -inf for a weight vanishing on a negative-energy region"},
        {"demo-prop51", "weighted lambda_2 functional unbounded below when lambda_2 < 0"},
        {"lak-construct", "lambda_k < 0 from k disjoint negative wells"},
        {"aubin-scaling", "concentration scaling of Aubin test functions"},
        {"selfcheck", "acceptance suite"},
    };
    return m;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"spectrum",    "mu",          "mu2",           "nodal-pos",
                                                "nodal-zero",  "nodal-neg",   "demo-prop21",   "demo-prop51",
                                                "lak-construct", "aubin-scaling", "selfcheck"};
    return names;
}

RunRecord run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts) {
    const auto anchor = anchors().find(name);
    if (anchor == anchors().end()) throw InvalidArgument("unknown command '" + name + "'");

    RunRecord rec;
    rec.command = name;
    rec.anchor = anchor->second;
    rec.config_hash = config_hash(cfg);
    rec.seed = cfg.solver.seed;
    rec.started = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path ledger = fs::path(cfg.output.dir) / cfg.output.ledger;

    try {
        Run r{cfg, opts, rec, GridSpec(cfg.grid.n, cfg.grid.m, cfg.grid.L)};
        if (name == "spectrum") cmd_spectrum(r);
        else if (name == "mu") cmd_mu(r);
        else if (name == "mu2") cmd_mu2(r);
        else if (name == "nodal-pos") cmd_nodal_pos(r);
        else if (name == "nodal-zero") cmd_nodal_zero(r);
        else if (name == "nodal-neg") cmd_nodal_neg(r);
        else if (name == "demo-prop21") cmd_demo_prop21(r);
        else if (name == "demo-prop51") cmd_demo_prop51(r);
        else if (name == "lak-construct") cmd_lak(r);
        else if (name == "aubin-scaling") cmd_aubin(r);
        else {
            int failed = 0;
            const auto results = run_acceptance(cfg, [&](const CriterionResult& c) {
                r.log("criterion " + std::to_string(c.id) + " " + (c.passed ? "PASS" : "FAIL") + "  " + c.title +
                      "  " + c.detail);
                if (opts.write_ledger) write_record(ledger, c.record);
            });
            for (const auto& c : results) {
                rec.labels["criterion_" + std::to_string(c.id)] = c.passed ? "pass" : "fail";
                failed += c.passed ? 0 : 1;
            }
            rec.scalars["criteria"] = static_cast<double>(results.size());
            rec.scalars["failed"] = failed;
            if (failed > 0) throw CertificateError(std::to_string(failed) + " acceptance criteria failed");
        }
    } catch (const Error& e) {
        rec.status = "error";
        rec.exit_code = e.exit_code();
        rec.error = e.what();
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.exit_code = 1;
        rec.error = e.what();
    }
    rec.finished = utc_timestamp();
    rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.write_ledger) write_record(ledger, rec);
    return rec;
}

}  // namespace yamabe
