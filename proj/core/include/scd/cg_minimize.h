// scd/cg_minimize.h
//
// Nonlinear conjugate gradient minimization: Polak-Ribiere directions, a
// line search of cubic extrapolation / cubic-quadratic interpolation that
// stops on the strong Wolfe-Powell conditions, and a slope-ratio guess for
// the first step of each new line search.

#ifndef SCD_CG_MINIMIZE_H_
#define SCD_CG_MINIMIZE_H_

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace scd {

/// Returns f(x) and writes the gradient into *grad (already sized).
using Objective = std::function<double(const Eigen::VectorXd &x,
                                       Eigen::VectorXd *grad)>;

struct CgOptions {
  int max_line_searches = 100;
  /// Expected reduction in f on the first line search.
  double initial_reduction = 1.0;
  double interpolate_limit = 0.1;  // stay this far inside the bracket
  double extrapolate_limit = 3.0;  // at most this many times the last step
  int max_evals_per_search = 20;
  double max_slope_ratio = 10.0;
  double sigma = 0.1;              // curvature (Wolfe) constant
  double rho = 0.05;               // sufficient decrease constant
};

struct CgResult {
  Eigen::VectorXd x;
  /// f after each accepted line search; front() is f(x0).
  std::vector<double> history;
  int line_searches = 0;
  int evaluations = 0;
  /// Two consecutive line searches failed; x is the best point seen.
  bool stalled = false;
};

CgResult MinimizeCg(const Objective &f, Eigen::VectorXd x0,
                    const CgOptions &opts = {});

}  // namespace scd

#endif  // SCD_CG_MINIMIZE_H_
