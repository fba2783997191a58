// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "yamabe/grid.hpp"

namespace yamabe {

/// Concentrating test function v_eps = c_eps eta(r) (eps + r^2)^((2-n)/2),
/// eta = 1 on B_delta, 0 outside B_2delta, smoothstep in between.
struct TestFnSpec {
    int n = 3;
    double eps = 0.1;
    double delta = 0.0;
    std::vector<double> center;  // only used when sampling on a grid
    double c_eps = 0.0;          // filled by build_v_eps
    std::string cutoff = "smoothstep";
};

/// Area of the unit sphere S^(n-1) in R^n.
double unit_sphere_area(int n);
/// Volume omega_n of the round unit sphere S^n.
double sphere_volume(int n);
/// n(n-1) omega_n^(2/n).
double mu_sn_constant(int n);

/// Cutoff eta(r) for the given delta and its radial derivative.
double aubin_cutoff(double r, double delta) noexcept;
double aubin_cutoff_derivative(double r, double delta) noexcept;

/// Profile and analytic radial derivative of v_eps (uses spec.c_eps).
double v_eps_profile(const TestFnSpec& spec, double r);
double v_eps_derivative(const TestFnSpec& spec, double r);

/// Radial integral of f(r) over the ball B_2delta in R^n: |S^(n-1)| int f(r) r^(n-1) dr,
/// by adaptive Gauss-Kronrod on a partition refined geometrically near sqrt(eps).
/// Throws ConvergenceError when the error estimate exceeds both rel_tol * |result|
/// and abs_tol.
double radial_integral(int n, double eps, double delta, const std::function<double(double)>& f,
                       double rel_tol = 1e-10, double abs_tol = 0.0);

/// Fills spec.c_eps so that integral(v_eps^N) = 1.
TestFnSpec build_v_eps(TestFnSpec spec);
/// Samples v_eps on the grid around spec.center.
ScalarField sample_v_eps(const GridSpec& grid, const TestFnSpec& spec);

/// integral(v_eps^p) by radial quadrature.
double v_eps_moment(const TestFnSpec& spec, double p);
/// Yamabe quotient c_n integral|grad v|^2 / (integral v^N)^(2/N) on a flat background.
double v_eps_yamabe(const TestFnSpec& spec);

struct ScalingRow {
    double eps = 0.0;
    double integral = 0.0;
};

struct ScalingReport {
    int n = 3;
    double p = 0.0;
    std::vector<ScalingRow> rows;
    double fitted_slope = 0.0;
    double predicted_slope = 0.0;
    /// "pass", "fail", "logarithmic" or "inconclusive".
    std::string verdict;
    /// Logarithmic branch only: exponent of |ln eps| in integral / eps^(n/4),
    /// and max/min of integral / (eps^(n/4) |ln eps|) over the list.
    double log_exponent = 0.0;
    double log_ratio_spread = 0.0;
};

/// Predicted log-log slope of integral(v_eps^p) in eps away from the
/// logarithmic case p = n/(n-2).
double predicted_moment_slope(int n, double p);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingReport scaling_check(int n, double p, const std::vector<double>& eps_list, double delta,
                            double slope_tol = 0.05);
/// Slope of c_eps against eps, predicted (n-2)/4.
ScalingReport c_eps_scaling(int n, const std::vector<double>& eps_list, double delta,
                            double slope_tol = 0.02);

struct YLimitRow {
    double eps = 0.0;
    double value = 0.0;
};
std::vector<YLimitRow> y_limit_check(int n, const std::vector<double>& eps_list, double delta);

/// CSV with columns epsilon,p,integral,fitted_slope,predicted_slope,verdict.
void write_scaling_csv(std::ostream& out, const std::vector<ScalingReport>& reports);

}  // namespace yamabe
