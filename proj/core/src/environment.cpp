#include "dmpp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {
constexpr double kEdgeClamp = 1.0 - 1e-12;

void check_band(const Obstacle& obs) {
  if (!(obs.d0 > 0.0)) throw ArgumentError("obstacle influence margin must be positive");
  if (obs.k_o < 0.0) throw ArgumentError("obstacle gain must be nonnegative");
}
}  // namespace

Obstacle make_ellipsoid(const Eigen::VectorXd& center, const Eigen::VectorXd& semi_axes,
                        double d0, double k_o) {
  if (center.size() != semi_axes.size())
    throw ArgumentError("ellipsoid center and semi-axes disagree on dimension");
  if (semi_axes.size() == 0 || (semi_axes.array() <= 0.0).any())
    throw ArgumentError("ellipsoid semi-axes must be positive");
  Obstacle o;
  o.shape = ObstacleShape::ellipsoid;
  o.center = center;
  o.semi_axes = semi_axes;
  o.d0 = d0;
  o.k_o = k_o;
  check_band(o);
  return o;
}

Obstacle make_plane(const Eigen::VectorXd& normal, const Eigen::VectorXd& point,
                    double d0, double k_o) {
  if (normal.size() != point.size())
    throw ArgumentError("plane normal and anchor disagree on dimension");
  const double nn = normal.norm();
  if (!(nn > 0.0)) throw ArgumentError("plane normal must be nonzero");
  Obstacle o;
  o.shape = ObstacleShape::plane;
  o.normal = normal / nn;
  o.point = point;
  o.d0 = d0;
  o.k_o = k_o;
  check_band(o);
  return o;
}

double surface_value(const Obstacle& obs, const Eigen::VectorXd& y) {
  switch (obs.shape) {
    case ObstacleShape::ellipsoid: {
      if (y.size() != obs.center.size())
        throw ArgumentError("point dimension does not match the obstacle");
      Eigen::ArrayXd d = (y - obs.center).array() / obs.semi_axes.array();
      return d.square().sum() - 1.0;
    }
    case ObstacleShape::plane:
      if (y.size() != obs.normal.size())
        throw ArgumentError("point dimension does not match the obstacle");
      return obs.normal.dot(y - obs.point);
  }
  throw ArgumentError("unknown obstacle shape");
}

Eigen::VectorXd surface_gradient(const Obstacle& obs, const Eigen::VectorXd& y) {
  switch (obs.shape) {
    case ObstacleShape::ellipsoid: {
      if (y.size() != obs.center.size())
        throw ArgumentError("point dimension does not match the obstacle");
      return 2.0 * ((y - obs.center).array() / obs.semi_axes.array().square()).matrix();
    }
    case ObstacleShape::plane:
      if (y.size() != obs.normal.size())
        throw ArgumentError("point dimension does not match the obstacle");
      return obs.normal;
  }
  throw ArgumentError("unknown obstacle shape");
}

namespace {
double edge_term(const Obstacle& obs, double psi) {
  if (psi <= 0.0)
    throw EnvironmentError("trajectory reached an obstacle surface" +
                           (obs.name.empty() ? std::string() : ": " + obs.name));
  if (psi >= obs.d0) return 0.0;
  const double e = std::pow((psi - obs.d0) / obs.d0, 2);
  return std::min(e, kEdgeClamp);
}
}  // namespace

double repulsive_potential(const Obstacle& obs, const Eigen::VectorXd& y) {
  const double e = edge_term(obs, surface_value(obs, y));
  return -obs.k_o * std::log1p(-e);
}

Eigen::VectorXd repulsive_force(const Obstacle& obs, const Eigen::VectorXd& y) {
  const double psi = surface_value(obs, y);
  const double e = edge_term(obs, psi);
  if (e == 0.0) return Eigen::VectorXd::Zero(y.size());
  const double de_dpsi = 2.0 * (psi - obs.d0) / (obs.d0 * obs.d0);
  return (-obs.k_o * de_dpsi / (1.0 - e)) * surface_gradient(obs, y);
}

Eigen::VectorXd total_repulsive_force(const std::vector<Obstacle>& obstacles,
                                      const Eigen::VectorXd& y) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(y.size());
  for (const Obstacle& o : obstacles) f += repulsive_force(o, y);
  return f;
}

double min_surface_value(const std::vector<Obstacle>& obstacles, const Eigen::VectorXd& y) {
  double m = std::numeric_limits<double>::infinity();
  for (const Obstacle& o : obstacles) m = std::min(m, surface_value(o, y));
  return m;
}

Eigen::VectorXd TargetSchedule::goal_at(double t) const {
  Eigen::VectorXd g = initial;
  for (const TargetEvent& ev : events) {
    if (ev.t <= t) {
      g = ev.goal;
    } else {
      break;
    }
  }
  if (drift.size() > 0) g += drift * t;
  return g;
}

Eigen::VectorXd ForceScript::force_at(double t, int n) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (const ForceWindow& w : windows) {
    if (t >= w.t_start && t < w.t_end) f += w.value;
  }
  return f;
}

}  // namespace dmpp
