#include "dmpp/baselines.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "dmpp/errors.hpp"

namespace dmpp {
namespace {

Demonstration hump_demo(int m, double height, double lift) {
  // Row 0 rises monotonically by lift, row 1 is a hump returning to start.
  Demonstration d;
  d.t = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
  d.Y.resize(2, m);
  for (int j = 0; j < m; ++j) {
    const double tau = static_cast<double>(j) / (m - 1);
    const double b = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
    d.Y(0, j) = lift * b;
    d.Y(1, j) = height * std::sin(M_PI * tau);
  }
  return d;
}

TEST(Baselines, ReproducesDemoAtDemoGoal) {
  Demonstration demo = hump_demo(200, 0.5, 1.0);
  DmpModel model = train_ls(demo, 30);
  ClassicalReference ref = make_classical(model, model.demo_start);
  double worst = 0.0;
  for (int j = 0; j < demo.m(); ++j) {
    const double s = static_cast<double>(j) / (demo.m() - 1);
    StateTriplet out = classical_eval(ref, model.demo_goal, s, 0.0, 0.0);
    worst = std::max(worst, (out.y - demo.Y.col(j)).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 2e-3);
}

TEST(Baselines, AmplitudeFollowsGoalDisplacement) {
  Demonstration demo = hump_demo(200, 0.004, 0.01);
  DmpModel model = train_ls(demo, 30);
  ClassicalReference ref = make_classical(model, model.demo_start);

  Eigen::VectorXd g(2);
  g << 4.0, 0.004 * 400.0;  // hits both rows with the same factor
  StateTriplet end = classical_eval(ref, g, 1.0, 0.0, 0.0);
  EXPECT_LE((end.y - g).norm(), 1e-9);

  StateTriplet mid_small = classical_eval(ref, model.demo_goal, 0.5, 0.0, 0.0);
  StateTriplet mid_big = classical_eval(ref, g, 0.5, 0.0, 0.0);
  EXPECT_NEAR(mid_big.y[0] / mid_small.y[0], 400.0, 1.0);
}

TEST(Baselines, GoalAtStartCollapsesToPoint) {
  Demonstration demo = hump_demo(200, 0.5, 1.0);
  DmpModel model = train_ls(demo, 30);
  ClassicalReference ref = make_classical(model, model.demo_start);
  for (double s : {0.0, 0.3, 0.5, 0.8, 1.0}) {
    StateTriplet out = classical_eval(ref, model.demo_start, s, 1.0, 0.0);
    EXPECT_LE((out.y - model.demo_start).norm(), 1e-12);
    EXPECT_LE(out.dy.norm(), 1e-12);
  }
}

TEST(Baselines, ZeroDisplacementDimension) {
  // Row 1 of the demo is identically zero, so its fitted profile endpoints
  // coincide exactly and the per-dimension scale is undefined there.
  Demonstration demo;
  demo.t = Eigen::VectorXd::LinSpaced(100, 0.0, 1.0);
  demo.Y = Eigen::MatrixXd::Zero(2, 100);
  for (int j = 0; j < 100; ++j) {
    const double tau = j / 99.0;
    demo.Y(0, j) = tau * tau * (3.0 - 2.0 * tau);
  }
  DmpModel model = train_ls(demo, 20);
  ClassicalReference ref = make_classical(model, model.demo_start);

  Eigen::VectorXd g_moved(2), g_held(2);
  g_moved << 1.0, 0.7;
  g_held << 2.0, 0.0;
  EXPECT_THROW(classical_eval(ref, g_moved, 0.5, 0.0, 0.0), ConditioningError);
  StateTriplet out = classical_eval(ref, g_held, 0.5, 0.0, 0.0);
  EXPECT_EQ(out.y[1], 0.0);
}

TEST(Baselines, VelocityMatchesFiniteDifferences) {
  Demonstration demo = hump_demo(200, 0.5, 1.0);
  DmpModel model = train_ls(demo, 25);
  ClassicalReference ref = make_classical(model, model.demo_start);
  Eigen::VectorXd g(2);
  g << 1.7, 0.2;
  const double s = 0.43, c = 0.9, h = 1e-6;
  StateTriplet at = classical_eval(ref, g, s, c, 0.0);
  StateTriplet up = classical_eval(ref, g, s + c * h, 0.0, 0.0);
  StateTriplet dn = classical_eval(ref, g, s - c * h, 0.0, 0.0);
  EXPECT_LE(((up.y - dn.y) / (2 * h) - at.dy).norm(), 1e-4 * (1.0 + at.dy.norm()));
}

TEST(Baselines, OrientationModelRejected) {
  Demonstration demo;
  demo.kind = DemoKind::orientation;
  demo.t = Eigen::VectorXd::LinSpaced(60, 0.0, 1.0);
  demo.Y.resize(3, 60);
  for (int j = 0; j < 60; ++j) {
    const double tau = j / 59.0;
    demo.Y.col(j) = Eigen::Vector3d(0.5 * tau, 0.2 * tau, 0.0);
  }
  DmpModel model = train_ls(demo, 12);
  EXPECT_THROW(make_classical(model, Eigen::Vector3d::Zero()), ArgumentError);
}

TEST(Baselines, GoalFilter) {
  Eigen::VectorXd g_hat = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 1.0, -2.0;
  Eigen::VectorXd one = goal_filter_step(g_hat, g, 4.0, 0.001);
  EXPECT_LE((one - 0.004 * g).norm(), 1e-15);

  for (int k = 0; k < 2000; ++k) g_hat = goal_filter_step(g_hat, g, 4.0, 0.001);
  EXPECT_LE((g_hat - g).norm(), 1e-3);

  EXPECT_THROW(goal_filter_step(Eigen::VectorXd::Zero(3), g, 4.0, 0.001), ArgumentError);
}

}  // namespace
}  // namespace dmpp
