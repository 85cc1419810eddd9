#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "scd/cg_minimize.h"
#include "scd/rng.h"

namespace scd {
namespace {

Eigen::MatrixXd RandomMatrix(int r, int c, Rng &rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

TEST(MinimizeCg, LeastSquaresMatchesClosedForm) {
  Rng rng(1);
  const Eigen::MatrixXd a = RandomMatrix(40, 8, rng);
  const Eigen::VectorXd b = RandomMatrix(40, 1, rng);
  Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    const Eigen::VectorXd r = a * x - b;
    *g = a.transpose() * r;
    return 0.5 * r.squaredNorm();
  };
  CgResult res = MinimizeCg(f, Eigen::VectorXd::Zero(8));
  const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(b);
  EXPECT_LT((res.x - exact).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MinimizeCg, HistoryNeverIncreases) {
  Rng rng(2);
  const Eigen::MatrixXd a = RandomMatrix(30, 12, rng);
  const Eigen::VectorXd b = RandomMatrix(30, 1, rng);
  // Smooth but non-quadratic: log-cosh regression.
  Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    const Eigen::VectorXd r = a * x - b;
    *g = a.transpose() * r.array().tanh().matrix();
    return r.array().cosh().log().sum();
  };
  CgOptions opts;
  opts.max_line_searches = 60;
  CgResult res = MinimizeCg(f, Eigen::VectorXd::Zero(12), opts);
  ASSERT_GE(res.history.size(), 2u);
  for (size_t i = 1; i < res.history.size(); ++i)
    EXPECT_LE(res.history[i], res.history[i - 1]);
  EXPECT_LE(res.line_searches, 60);
  Eigen::VectorXd g(12);
  EXPECT_NEAR(f(res.x, &g), res.history.back(), 1e-12);
}

TEST(MinimizeCg, Rosenbrock) {
  Objective f = [](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    const double a = 1 - x(0), b = x(1) - x(0) * x(0);
    (*g)(0) = -2 * a - 400 * x(0) * b;
    (*g)(1) = 200 * b;
    return a * a + 100 * b * b;
  };
  CgOptions opts;
  opts.max_line_searches = 500;
  CgResult res = MinimizeCg(f, Eigen::Vector2d(-1.2, 1.0), opts);
  EXPECT_NEAR(res.x(0), 1.0, 1e-5);
  EXPECT_NEAR(res.x(1), 1.0, 1e-5);
}

TEST(MinimizeCg, StartingAtMinimumStaysThere) {
  Objective f = [](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    *g = 2 * x;
    return x.squaredNorm();
  };
  CgResult res = MinimizeCg(f, Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(res.x.isZero(0));
  EXPECT_EQ(res.history.front(), 0.0);
}

TEST(MinimizeCg, Deterministic) {
  Rng rng(3);
  const Eigen::MatrixXd a = RandomMatrix(20, 6, rng);
  const Eigen::VectorXd b = RandomMatrix(20, 1, rng);
  Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    const Eigen::VectorXd r = a * x - b;
    *g = a.transpose() * r.array().tanh().matrix();
    return r.array().cosh().log().sum();
  };
  CgResult r1 = MinimizeCg(f, Eigen::VectorXd::Ones(6));
  CgResult r2 = MinimizeCg(f, Eigen::VectorXd::Ones(6));
  EXPECT_EQ(r1.x, r2.x);
  EXPECT_EQ(r1.history, r2.history);
  EXPECT_EQ(r1.evaluations, r2.evaluations);
}

}  // namespace
}  // namespace scd
