// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "yamabe/operator.hpp"

namespace yamabe {

/// Run configuration. Text form: `[section]` headers followed by `key = value`
/// lines; `#` starts a comment. Unknown sections or keys are errors.
struct RunConfig {
    struct Grid {
        int n = 3;
        int m = 16;
        double L = 6.283185307179586;
    } grid;
    struct Model {
        /// flat | constant:<s0> | wells:<k>:<radius>:<depth> | file:<path>
        std::string potential = "flat";
        /// constant:<t> | random:<seed>:<amplitude> | file:<path>
        std::string weight = "constant:1";
    } model;
    struct Solver {
        int k = 6;
        double tol = 1e-8;
        int max_iter = 500;
        std::uint64_t seed = 0;
    } solver;
    struct Mu {
        int max_iter = 2000;
        double tol = 1e-9;
    } mu;
    struct Mu2 {
        int max_iter = 40;
        double u_floor = 1e-6;
        double rel_tol = 1e-10;
    } mu2;
    struct Nodal {
        double theta = 0.5;
        double fp_tol = 1e-6;
        int max_iter = 200;
        int ig_max_iter = 200;
        double grad_tol = 1e-6;
        double constraint_tol = 1e-8;
        double zero_tol = 1e-8;
    } nodal;
    struct Demo {
        std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125, 0.01, 0.001};
        double delta = 0.7853981633974483;
        std::vector<double> alphas{1.0, 0.1, 0.01, 0.001, 0.0001};
        double well_depth = -50.0;
        double well_radius = 1.2;
    } demo;
    struct Lak {
        int k = 3;
        double depth = -200.0;
        double radius = 0.7853981633974483;
        double delta = 0.1;
    } lak;
    struct Aubin {
        int n = 3;
        std::vector<double> p_list{2.0, 3.0, 5.0};
        std::vector<double> eps_list{1e-6, 1e-5, 1e-4, 1e-3};
        std::vector<double> c_eps_list{1e-4, 1e-3, 1e-2, 1e-1};
        double delta = 0.7853981633974483;
    } aubin;
    struct Output {
        std::string dir = "out";
        std::string ledger = "ledger.jsonl";
    } output;
};

/// Parses and validates; errors name the offending line.
RunConfig parse_config(std::string_view text);

/// Every key in fixed order, numbers in shortest round-trip form.
std::string canonical_text(const RunConfig& cfg);

/// `section.key=value`; validates the result.
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Range checks plus a trial build of the potential and weight specs.
void validate(const RunConfig& cfg);

/// FNV-1a 64 of the canonical text with [output] at its defaults, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Weight spec: "constant:<t>" | "random:<seed>:<amplitude>" | "file:<path.yamf>".
WeightField parse_weight(const GridSpec& grid, const std::string& spec);

}  // namespace yamabe
