// scd/cg_minimize.cc

#include "scd/cg_minimize.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scd {
namespace {

bool Finite(double v) { return std::isfinite(v); }

}  // namespace

CgResult MinimizeCg(const Objective &f, Eigen::VectorXd x0,
                    const CgOptions &opts) {
  const double kInt = opts.interpolate_limit;
  const double kExt = opts.extrapolate_limit;
  const double kSig = opts.sigma;
  const double kRho = opts.rho;
  const Eigen::Index n = x0.size();

  CgResult res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd df0(n), df3(n);
  double f0 = f(x, &df0);
  ++res.evaluations;
  res.history.push_back(f0);

  Eigen::VectorXd s = -df0;
  double d0 = -s.squaredNorm();
  double x3 = opts.initial_reduction / (1.0 - d0);
  bool ls_failed = false;

  Eigen::VectorXd best_x, best_df, trial(n);
  while (res.line_searches < opts.max_line_searches && d0 < 0.0) {
    ++res.line_searches;
    best_x = x;
    double best_f = f0;
    best_df = df0;
    int budget = opts.max_evals_per_search;

    double x1 = 0, f1 = 0, d1 = 0;
    double x2 = 0, f2 = f0, d2 = d0;
    double f3 = f0, d3 = d0;
    double x4 = 0, f4 = 0, d4 = 0;

    // Extrapolate until the step brackets a minimum.
    for (;;) {
      x2 = 0;
      f2 = f0;
      d2 = d0;
      f3 = f0;
      df3 = df0;
      bool success = false;
      while (!success && budget > 0) {
        --budget;
        trial = x + x3 * s;
        f3 = f(trial, &df3);
        ++res.evaluations;
        if (Finite(f3) && df3.allFinite()) {
          success = true;
        } else {
          x3 = (x2 + x3) / 2;  // bisect back toward the origin
        }
      }
      if (success && f3 < best_f) {
        best_x = x + x3 * s;
        best_f = f3;
        best_df = df3;
      }
      d3 = df3.dot(s);
      if (!success || d3 > kSig * d0 || f3 > f0 + x3 * kRho * d0 ||
          budget == 0) {
        break;
      }
      x1 = x2; f1 = f2; d1 = d2;
      x2 = x3; f2 = f3; d2 = d3;
      const double a = 6 * (f1 - f2) + 3 * (d2 + d1) * (x2 - x1);
      const double b = 3 * (f2 - f1) - (2 * d1 + d2) * (x2 - x1);
      const double disc = b * b - a * d1 * (x2 - x1);
      x3 = disc < 0 ? std::numeric_limits<double>::quiet_NaN()
                    : x1 - d1 * (x2 - x1) * (x2 - x1) / (b + std::sqrt(disc));
      if (!Finite(x3) || x3 < 0) {
        x3 = x2 * kExt;
      } else if (x3 > x2 * kExt) {
        x3 = x2 * kExt;
      } else if (x3 < x2 + kInt * (x2 - x1)) {
        x3 = x2 + kInt * (x2 - x1);
      }
    }

    // Interpolate inside the bracket until the Wolfe conditions hold.
    while ((std::abs(d3) > -kSig * d0 || f3 > f0 + x3 * kRho * d0) &&
           budget > 0 && Finite(f3)) {
      if (d3 > 0 || f3 > f0 + x3 * kRho * d0) {
        x4 = x3; f4 = f3; d4 = d3;
      } else {
        x2 = x3; f2 = f3; d2 = d3;
      }
      if (f4 > f0) {
        x3 = x2 - (0.5 * d2 * (x4 - x2) * (x4 - x2)) /
                      (f4 - f2 - d2 * (x4 - x2));
      } else {
        const double a = 6 * (f2 - f4) / (x4 - x2) + 3 * (d4 + d2);
        const double b = 3 * (f4 - f2) - (2 * d2 + d4) * (x4 - x2);
        const double disc = b * b - a * d2 * (x4 - x2) * (x4 - x2);
        x3 = disc < 0 ? std::numeric_limits<double>::quiet_NaN()
                      : x2 + (std::sqrt(disc) - b) / a;
      }
      if (!Finite(x3)) x3 = (x2 + x4) / 2;
      x3 = std::max(std::min(x3, x4 - kInt * (x4 - x2)), x2 + kInt * (x4 - x2));
      trial = x + x3 * s;
      f3 = f(trial, &df3);
      ++res.evaluations;
      if (Finite(f3) && f3 < best_f) {
        best_x = trial;
        best_f = f3;
        best_df = df3;
      }
      --budget;
      d3 = df3.dot(s);
    }

    if (Finite(f3) && std::abs(d3) < -kSig * d0 && f3 < f0 + x3 * kRho * d0) {
      x += x3 * s;
      f0 = f3;
      res.history.push_back(f0);
      const double pr = (df3.squaredNorm() - df0.dot(df3)) / df0.squaredNorm();
      s = pr * s - df3;
      df0 = df3;
      const double d_prev = d0;
      d0 = df0.dot(s);
      if (d0 > 0) {  // not a descent direction: restart along -gradient
        s = -df0;
        d0 = -s.squaredNorm();
      }
      x3 *= std::min(opts.max_slope_ratio,
                     d_prev / (d0 - std::numeric_limits<double>::min()));
      ls_failed = false;
    } else {
      x = best_x;
      f0 = best_f;
      df0 = best_df;
      if (ls_failed || res.line_searches >= opts.max_line_searches) {
        res.stalled = ls_failed;
        break;
      }
      s = -df0;
      d0 = -s.squaredNorm();
      x3 = 1.0 / (1.0 - d0);
      ls_failed = true;
    }
  }
  res.x = std::move(x);
  return res;
}

}  // namespace scd
