#include "dmpp/adaptation.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dmpp/errors.hpp"

namespace dmpp {
namespace {

DmpModel make_model(int K = 20, int n = 2, int m = 150) {
  Demonstration demo;
  demo.t = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
  demo.Y.resize(n, m);
  for (int j = 0; j < m; ++j) {
    const double tau = static_cast<double>(j) / (m - 1);
    const double b = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
    for (int i = 0; i < n; ++i) {
      demo.Y(i, j) = (i + 1) * b + 0.1 * i * std::sin(M_PI * tau);
    }
  }
  return train_ls(demo, K);
}

Eigen::MatrixXd goal_triplet(const Eigen::VectorXd& g) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(g.size(), 3);
  t.col(0) = g;
  return t;
}

// Drives a recorded run with goal jumps and via traffic, then checks the
// recursive weights against the one-shot penalized solution of the same
// constraint stack.
double oracle_gap(const DmpModel& model, double start_phase, const Eigen::MatrixXd* W_init) {
  AdaptationConfig cfg;
  cfg.record_blocks = true;
  Eigen::VectorXd y0 = model.demo_start;
  Eigen::VectorXd g = model.demo_goal;
  AdaptationState st = init_adaptation(model, y0, g, {}, HistoryMode::preserve_learned, cfg,
                                       W_init, start_phase);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0.0, 0.3);
  const int steps = 50;
  const double dir = start_phase == 0.0 ? 1.0 : -1.0;
  for (int k = 1; k <= steps; ++k) {
    StepInput in;
    in.s = start_phase + dir * 0.01 * k;
    in.s_prev = start_phase + dir * 0.01 * (k - 1);
    in.want_state = true;
    if (k == 17 || k == 33) {
      for (int i = 0; i < g.size(); ++i) g[i] += nd(rng);
    }
    in.goal = goal_triplet(g);
    if (k == 10) {
      ViaPoint vp;
      vp.id = "probe";
      vp.s_v = start_phase + dir * 0.7;
      vp.y_v = Eigen::VectorXd::Constant(model.n, 0.8);
      in.via_add.push_back(vp);
    }
    if (k == 30) in.via_remove.push_back("probe");
    if (k == 40) {
      ViaPoint vp;
      vp.id = "kept";
      vp.s_v = start_phase + dir * 0.85;
      vp.y_v = Eigen::VectorXd::Constant(model.n, 1.2);
      in.via_add.push_back(vp);
    }
    st.step(in);
  }

  Eigen::MatrixXd W_batch = batch_solve(model, st.snapshot(), BatchMethod::penalized);
  return (st.W() - W_batch).norm() / W_batch.norm();
}

TEST(Adaptation, InitPinsBoundaryAndGoal) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  EXPECT_LE(st.init_residual, 1e-6);
  Residuals res = st.residuals();
  EXPECT_LE(res.boundary, 1e-6);
  EXPECT_LE(res.goal, 1e-6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.P());
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Adaptation, RecursiveMatchesBatchForward) {
  EXPECT_LE(oracle_gap(make_model(), 0.0, nullptr), 1e-6);
}

TEST(Adaptation, RecursiveMatchesBatchReverse) {
  EXPECT_LE(oracle_gap(make_model(), 1.0, nullptr), 1e-6);
}

TEST(Adaptation, RecursiveMatchesBatchWithSeededWeights) {
  DmpModel model = make_model();
  Eigen::MatrixXd W_init = 0.5 * model.W0;
  EXPECT_LE(oracle_gap(model, 0.0, &W_init), 1e-6);
}

TEST(Adaptation, PenalizedApproachesExactKkt) {
  DmpModel model = make_model();
  BatchProblem prob;
  prob.y0 = model.demo_start;
  prob.goal = goal_triplet(model.demo_goal + Eigen::VectorXd::Constant(model.n, 0.4));
  ViaPoint a{"a", 0.35, Eigen::VectorXd::Constant(model.n, 0.5)};
  ViaPoint b{"b", 0.72, Eigen::VectorXd::Constant(model.n, 1.1)};
  prob.vias = {a, b};
  prob.eps.boundary_pos = prob.eps.boundary_vel = prob.eps.boundary_acc = 1e-10;
  prob.eps.via = 1e-10;

  Eigen::MatrixXd W_pen = batch_solve(model, prob, BatchMethod::penalized);
  Eigen::MatrixXd W_kkt = batch_solve(model, prob, BatchMethod::exact_kkt);
  EXPECT_LE((W_pen - W_kkt).norm() / W_kkt.norm(), 1e-5);

  // The exact solution satisfies its constraints to working precision.
  EXPECT_LE((W_kkt.transpose() * model.basis.phi(0.35) - a.y_v).norm(), 1e-8);
  EXPECT_LE((W_kkt.transpose() * model.basis.block_A(1.0) - prob.goal).norm(), 1e-8);
}

TEST(Adaptation, ViaAddRemoveRestoresWeights) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  Eigen::MatrixXd before = st.W();

  ViaPoint vp{"v1", 0.55, Eigen::VectorXd::Constant(model.n, 2.0)};
  st.update(via_constraint_block(model, vp, st.eps()));
  EXPECT_GT((st.W() - before).norm(), 1e-6);
  EXPECT_LE((st.W().transpose() * model.basis.phi(0.55) - vp.y_v).norm(), 1e-4);

  st.downdate(via_constraint_block(model, vp, st.eps(), true));
  EXPECT_LE((st.W() - before).norm(), 1e-8 * before.norm());
  EXPECT_TRUE(st.vias().empty());
}

TEST(Adaptation, DowndateRejectsBadRequests) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);

  ViaPoint ghost{"ghost", 0.4, Eigen::VectorXd::Zero(model.n)};
  EXPECT_THROW(st.downdate(via_constraint_block(model, ghost, st.eps(), true)), DowndateError);

  ConstraintBlock state = state_block(model, 0.2, 0.19,
                                      Eigen::MatrixXd::Zero(model.n, 3), st.eps());
  state.r = -state.r;
  EXPECT_THROW(st.downdate(state), DowndateError);

  Eigen::MatrixXd wrong_goal = goal_triplet(model.demo_goal * 3.0);
  EXPECT_THROW(st.downdate(goal_block(model, wrong_goal, st.eps(), true)), DowndateError);

  ViaPoint vp{"v", 0.5, Eigen::VectorXd::Ones(model.n)};
  st.update(via_constraint_block(model, vp, st.eps()));
  ConstraintBlock pos = via_constraint_block(model, vp, st.eps());
  EXPECT_THROW(st.downdate(pos), ArgumentError);  // positive weights

  EpsilonProfile other = st.eps();
  other.via = 3e-7;
  EXPECT_THROW(st.downdate(via_constraint_block(model, vp, other, true)), DowndateError);
}

TEST(Adaptation, DuplicateViaIdRejected) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  ViaPoint vp{"dup", 0.5, Eigen::VectorXd::Ones(model.n)};
  st.update(via_constraint_block(model, vp, st.eps()));
  EXPECT_THROW(st.update(via_constraint_block(model, vp, st.eps())), ArgumentError);
}

TEST(Adaptation, StepGatesStateOnPhaseAdvance) {
  DmpModel model = make_model();
  AdaptationConfig cfg;
  cfg.state_phase_grid = 0.01;
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal, {},
                                       HistoryMode::preserve_learned, cfg);
  StepInput in;
  in.goal = goal_triplet(model.demo_goal);
  in.want_state = true;

  in.s = 0.02;
  in.s_prev = 0.0;
  StepReport r1 = st.step(in);
  EXPECT_TRUE(r1.state_applied);

  in.s = 0.025;  // below the grid spacing since the last anchor
  in.s_prev = 0.02;
  StepReport r2 = st.step(in);
  EXPECT_FALSE(r2.state_applied);

  in.s = 0.035;
  in.s_prev = 0.025;
  StepReport r3 = st.step(in);
  EXPECT_TRUE(r3.state_applied);
  EXPECT_LE(r3.state_residual, 1e-6);
}

TEST(Adaptation, StepReplacesGoalOnlyWhenMoved) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  StepInput in;
  in.s = 0.01;
  in.s_prev = 0.0;
  in.goal = goal_triplet(model.demo_goal);
  EXPECT_FALSE(st.step(in).goal_changed);
  in.goal(0, 0) += 0.5;
  EXPECT_TRUE(st.step(in).goal_changed);
  EXPECT_FALSE(st.step(in).goal_changed);
  Residuals res = st.residuals();
  EXPECT_LE(res.goal, 1e-4);
}

TEST(Adaptation, ExternalModeNeedsMeasuredState) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal,
                                       EpsilonProfile::external_signal(),
                                       HistoryMode::adapt_to_external);
  StepInput in;
  in.s = 0.02;
  in.s_prev = 0.0;
  in.goal = goal_triplet(model.demo_goal);
  in.want_state = true;
  EXPECT_THROW(st.step(in), ArgumentError);

  in.y = Eigen::VectorXd::Zero(model.n);
  in.dy_phase = Eigen::VectorXd::Zero(model.n);
  in.ddy_phase_prev = Eigen::VectorXd::Zero(model.n);
  EXPECT_TRUE(st.step(in).state_applied);
}

TEST(Adaptation, CovarianceStaysSpdUnderLoad) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 0.2);
  Eigen::VectorXd g = model.demo_goal;
  for (int k = 1; k <= 200; ++k) {
    StepInput in;
    in.s = 0.005 * k;
    in.s_prev = 0.005 * (k - 1);
    in.want_state = true;
    if (k % 37 == 0)
      for (int i = 0; i < g.size(); ++i) g[i] += nd(rng);
    in.goal = goal_triplet(g);
    st.step(in);
  }
  Eigen::MatrixXd P = st.P();
  EXPECT_LE((P - P.transpose()).norm(), 1e-10 * P.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_LE(st.residuals().max_active(), 1e-4);
}

TEST(Adaptation, RedundantTightDirectionsRaiseConditioningError) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  ConstraintBlock b;
  b.kind = ConstraintKind::state;
  b.H.resize(model.K(), 2);
  b.H.col(0) = model.basis.phi(0.5);
  b.H.col(1) = model.basis.phi(0.5);  // same direction twice
  b.Z = Eigen::MatrixXd::Zero(model.n, 2);
  b.r = Eigen::VectorXd::Constant(2, 1e-20);
  EXPECT_THROW(st.update(b), ConditioningError);
}

TEST(Adaptation, InitValidation) {
  DmpModel model = make_model();
  Eigen::VectorXd y0 = model.demo_start;
  Eigen::VectorXd g = model.demo_goal;

  EXPECT_THROW(init_adaptation(model, Eigen::VectorXd::Zero(5), g), ArgumentError);

  EpsilonProfile bad;
  bad.via = 0.0;
  EXPECT_THROW(init_adaptation(model, y0, g, bad), ArgumentError);

  AdaptationConfig cfg;
  Eigen::MatrixXd W_bad = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(init_adaptation(model, y0, g, {}, HistoryMode::preserve_learned, cfg, &W_bad),
               ArgumentError);

  EXPECT_THROW(init_adaptation(model, y0, g, {}, HistoryMode::preserve_learned, cfg, nullptr,
                               0.5),
               ArgumentError);
}

TEST(Adaptation, SnapshotRequiresRecording) {
  DmpModel model = make_model();
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
  EXPECT_THROW(st.snapshot(), ArgumentError);
}

TEST(Adaptation, SnapshotKeepsSeededPrior) {
  DmpModel model = make_model();
  AdaptationConfig cfg;
  cfg.record_blocks = true;
  Eigen::MatrixXd W_init = 0.25 * model.W0;
  AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal, {},
                                       HistoryMode::preserve_learned, cfg, &W_init);
  BatchProblem prob = st.snapshot();
  EXPECT_LE((prob.W_prior - W_init).norm(), 0.0);
  EXPECT_EQ(prob.boundary_phase, 0.0);
  EXPECT_EQ(prob.goal_phase, 1.0);
}

TEST(Adaptation, ViaPhaseHeuristic) {
  DmpModel model = make_model();
  Eigen::VectorXd on_path = model.W0.transpose() * model.basis.phi(0.6);
  const double s = via_phase_heuristic(model, model.W0, 0.1, on_path, 200);
  EXPECT_NEAR(s, 0.6, 0.01);

  EXPECT_EQ(via_phase_heuristic(model, model.W0, 1.0, on_path), 1.0);
  EXPECT_EQ(via_phase_heuristic(model, model.W0, 1.3, on_path), 1.0);

  Eigen::VectorXd far = Eigen::VectorXd::Constant(model.n, 50.0);
  const double sf = via_phase_heuristic(model, model.W0, 0.2, far);
  EXPECT_GT(sf, 0.2);
  EXPECT_LE(sf, 1.0);

  EXPECT_THROW(via_phase_heuristic(model, model.W0, 0.1, on_path, 0), ArgumentError);
  EXPECT_THROW(via_phase_heuristic(model, model.W0, 0.1, Eigen::VectorXd::Zero(7)),
               ArgumentError);
}

}  // namespace
}  // namespace dmpp
