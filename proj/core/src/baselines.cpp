#include "dmpp/baselines.hpp"

#include "dmpp/errors.hpp"

namespace dmpp {

ClassicalReference make_classical(const DmpModel& model, const Eigen::VectorXd& y0) {
  if (model.kind != DemoKind::position)
    throw ArgumentError("classical scaling is defined for position models");
  if (y0.size() != model.n) throw ArgumentError("start position has wrong dimension");
  ClassicalReference ref;
  ref.model = &model;
  ref.y0 = y0;
  ref.f0 = model.W0.transpose() * model.basis.phi(0.0);
  ref.f1 = model.W0.transpose() * model.basis.phi(1.0);
  return ref;
}

StateTriplet classical_eval(const ClassicalReference& ref, const Eigen::VectorXd& g,
                            double s, double s_dot, double s_ddot) {
  const DmpModel& m = *ref.model;
  if (g.size() != m.n) throw ArgumentError("goal has wrong dimension");

  Eigen::VectorXd scale(m.n);
  for (int d = 0; d < m.n; ++d) {
    const double den = ref.f1[d] - ref.f0[d];
    const double num = g[d] - ref.y0[d];
    if (den == 0.0) {
      if (num != 0.0)
        throw ConditioningError(
            "classical scaling is singular: demonstrated displacement is zero "
            "along a dimension the goal moves");
      scale[d] = 0.0;
    } else {
      scale[d] = num / den;
    }
  }

  Eigen::VectorXd phi(m.K()), dphi(m.K()), ddphi(m.K());
  m.basis.eval(s, phi, dphi, ddphi);
  StateTriplet out;
  Eigen::VectorXd f = m.W0.transpose() * phi;
  Eigen::VectorXd fp = m.W0.transpose() * dphi;
  Eigen::VectorXd fpp = m.W0.transpose() * ddphi;
  out.y = scale.cwiseProduct(f - ref.f0) + ref.y0;
  out.dy = scale.cwiseProduct(fp) * s_dot;
  out.ddy = scale.cwiseProduct(fpp * (s_dot * s_dot) + fp * s_ddot);
  return out;
}

Eigen::VectorXd goal_filter_step(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g,
                                 double a_g, double dt) {
  if (g_hat.size() != g.size()) throw ArgumentError("goal filter dimensions disagree");
  return g_hat + dt * a_g * (g - g_hat);
}

}  // namespace dmpp
