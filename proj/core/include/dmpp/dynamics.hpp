#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dmpp/adaptation.hpp"
#include "dmpp/baselines.hpp"
#include "dmpp/environment.hpp"
#include "dmpp/model.hpp"
#include "dmpp/quaternion.hpp"

namespace dmpp {

struct RolloutOptions {
  double dt = 0.002;
  double duration = -1.0;  // <= 0 selects the model's demonstrated duration
  bool reverse = false;
  Generalization gen = Generalization::dmpp;
  HistoryMode mode = HistoryMode::preserve_learned;
  EpsilonProfile eps;
  AdaptationConfig adapt_cfg;
  double canonical_gain = 40.0;
  double goal_filter_ag = 4.0;
  double phase_stop_ad = 0.0;   // phase slowdown per unit scripted force
  double coupling_mass = -1.0;  // <= 0 selects 5 (position) or 2 (orientation)
  // External-signal state constraints are skipped while the phase rate is
  // below this fraction of nominal; the conversion divides by it.
  double state_rate_floor = 0.02;
  Eigen::VectorXd y0, goal;  // empty selects the demonstrated endpoints
  const Eigen::MatrixXd* W_init = nullptr;
  bool collect_debug = false;
};

struct DebugTick {
  double t = 0.0, s = 0.0;
  bool state_applied = false, goal_changed = false;
  int vias_active = 0;
  double state_residual = 0.0, w_norm = 0.0;
};

struct RolloutMetrics {
  double final_goal_error = 0.0;
  double max_abs_acc = 0.0;
  double min_obstacle_value = std::numeric_limits<double>::infinity();
  double max_force = 0.0;
  double max_residual = 0.0;        // boundary/goal/via, over the whole run
  double max_state_residual = 0.0;  // per-step state blocks
  double adapt_mean_ms = 0.0, adapt_p99_ms = 0.0, adapt_max_ms = 0.0;
  int steps = 0;
  double wall_ms = 0.0;
};

// Tick-by-tick execution record. Rows are states at t_k before integration;
// for orientation runs y/dy/ddy hold the rotation-vector coordinates, the
// body rate and its derivative, with the quaternions alongside.
struct Trajectory {
  DemoKind kind = DemoKind::position;
  std::vector<double> t, s, s_dot;
  Eigen::MatrixXd y, dy, ddy;
  Eigen::MatrixXd y_s, u;
  std::vector<double> residual;        // boundary/goal/via residual per tick
  std::vector<double> state_residual;  // this tick's state block, 0 if none
  std::vector<UnitQuaternion> q, q_s;
  std::vector<double> adapt_ms;
  std::vector<DebugTick> debug;
  Eigen::MatrixXd W_final;
  RolloutMetrics metrics;

  int rows() const { return static_cast<int>(t.size()); }
};

// Integrates the full system: adaptation tick, reference evaluation,
// obstacle/scripted-force coupling, transformation dynamics, canonical
// dynamics, all under semi-implicit Euler at fixed dt.
Trajectory run_rollout(const DmpModel& model, const Environment& env,
                       const RolloutOptions& opts);

}  // namespace dmpp
