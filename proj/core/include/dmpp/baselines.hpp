#pragma once

#include <Eigen/Dense>

#include "dmpp/model.hpp"

namespace dmpp {

enum class Generalization { dmpp, classical, classical_goal_filter };

// Classical start/goal scaling of the learned forcing profile:
//   y_s(s) = K_s (f(s) - f(0)) + y0,  K_s = diag((g - y0) / (f(1) - f(0)))
// K_s depends on the current goal, so it is recomputed per evaluation.
struct ClassicalReference {
  const DmpModel* model = nullptr;
  Eigen::VectorXd y0;
  Eigen::VectorXd f0, f1;  // learned profile endpoints
};

ClassicalReference make_classical(const DmpModel& model, const Eigen::VectorXd& y0);

// Throws ConditioningError when a goal displacement demands scaling along a
// dimension whose demonstrated displacement is exactly zero.
StateTriplet classical_eval(const ClassicalReference& ref, const Eigen::VectorXd& g,
                            double s, double s_dot, double s_ddot);

// First-order goal filter g_hat' = a_g (g - g_hat), integrated explicitly.
Eigen::VectorXd goal_filter_step(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g,
                                 double a_g, double dt);

}  // namespace dmpp
