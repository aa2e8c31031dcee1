// numeric.hpp — small optimization toolkit: 1-D minimization, root bracketing,
// Nelder–Mead simplex, and Levenberg–Marquardt least squares with a numerical
// Jacobian. All routines are deterministic given identical inputs.

#pragma once

#include <Eigen/Dense>

#include <functional>

namespace fluxsim::numeric {

using ScalarFn = std::function<double(double)>;
using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Minimum1D {
    double x = 0.0;
    double fx = 0.0;
    int n_evals = 0;
};

// Golden-section search on [a, b]; assumes a single interior minimum.
Minimum1D golden_section(const ScalarFn& f, double a, double b, double xtol,
                         int max_iter = 200);

// Bisection root finder; requires f(lo) and f(hi) of opposite sign.
double bisect_root(const ScalarFn& f, double lo, double hi, double xtol,
                   int max_iter = 200);

struct NelderMeadOptions {
    int max_evals = 6000;
    double xtol = 1e-10;
    double ftol = 1e-14;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int n_evals = 0;
    bool converged = false;
};

// Downhill simplex; `steps` gives the initial simplex edge per dimension.
NelderMeadResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& steps,
                             const NelderMeadOptions& opts = {});

struct LevMarOptions {
    int max_iter = 200;
    double ftol = 1e-14;        // relative SSR improvement
    double xtol = 1e-12;        // relative step size
    double fd_step = 1e-6;      // relative finite-difference step
};

struct LevMarResult {
    Eigen::VectorXd x;
    double ssr = 0.0;
    int n_residuals = 0;
    int n_iter = 0;
    bool converged = false;
    Eigen::MatrixXd jtj;        // J^T J at the solution (for error estimates)
};

// Levenberg–Marquardt with central-difference Jacobian and diagonal scaling.
// Non-finite residuals are treated as a rejected step.
LevMarResult levenberg_marquardt(const ResidualFn& f, const Eigen::VectorXd& x0,
                                 const LevMarOptions& opts = {});

// Asymptotic standard errors: sqrt(diag((J^T J)^-1) * ssr/(n-p)).
Eigen::VectorXd standard_errors(const LevMarResult& r);

// Median of a copy of `v` (empty input returns NaN).
double median(std::vector<double> v);

// Sliding median filter with shrinking windows at the edges.
std::vector<double> median_filter(const std::vector<double>& y, int window);

}  // namespace fluxsim::numeric
