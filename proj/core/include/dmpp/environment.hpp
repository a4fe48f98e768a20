#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmpp {

enum class ObstacleShape { ellipsoid, plane };

// Static obstacle described by an isopotential function psi: zero on the
// surface, positive outside. The repulsive field acts on the band
// 0 < psi < d0 and blows up logarithmically toward the surface.
struct Obstacle {
  ObstacleShape shape = ObstacleShape::ellipsoid;
  std::string name;
  Eigen::VectorXd center;     // ellipsoid
  Eigen::VectorXd semi_axes;  // ellipsoid
  Eigen::VectorXd normal;     // plane (stored normalized)
  Eigen::VectorXd point;      // plane anchor
  double d0 = 1.0;
  double k_o = 1.0;
};

Obstacle make_ellipsoid(const Eigen::VectorXd& center, const Eigen::VectorXd& semi_axes,
                        double d0 = 1.0, double k_o = 1.0);
Obstacle make_plane(const Eigen::VectorXd& normal, const Eigen::VectorXd& point,
                    double d0 = 0.05, double k_o = 1.0);

double surface_value(const Obstacle& obs, const Eigen::VectorXd& y);
Eigen::VectorXd surface_gradient(const Obstacle& obs, const Eigen::VectorXd& y);

// Potential k_o * V(psi(y)) and its negative gradient. Throws
// EnvironmentError when y is on or inside the obstacle.
double repulsive_potential(const Obstacle& obs, const Eigen::VectorXd& y);
Eigen::VectorXd repulsive_force(const Obstacle& obs, const Eigen::VectorXd& y);

Eigen::VectorXd total_repulsive_force(const std::vector<Obstacle>& obstacles,
                                      const Eigen::VectorXd& y);
double min_surface_value(const std::vector<Obstacle>& obstacles, const Eigen::VectorXd& y);

// Piecewise-constant target with optional constant drift. Events hold their
// value until the next one fires.
struct TargetEvent {
  double t = 0.0;
  Eigen::VectorXd goal;
};

struct TargetSchedule {
  Eigen::VectorXd initial;
  std::vector<TargetEvent> events;  // sorted by time
  Eigen::VectorXd drift;            // empty means static

  Eigen::VectorXd goal_at(double t) const;
  bool varies() const { return !events.empty() || drift.size() > 0; }
};

// Scripted external force, summed over active windows.
struct ForceWindow {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::VectorXd value;
};

struct ForceScript {
  std::vector<ForceWindow> windows;
  Eigen::VectorXd force_at(double t, int n) const;
  bool empty() const { return windows.empty(); }
};

// Via-point request fired during execution, either at a wall-clock time or
// at a phase crossing. A request without a phase gets one from the
// closest-point heuristic when it fires.
struct ViaEvent {
  std::string id;
  double t = -1.0;
  double s = -1.0;      // explicit phase; < 0 means assign at fire time
  Eigen::VectorXd point;
  bool remove = false;  // remove a previously added via instead
};

struct Environment {
  std::vector<Obstacle> obstacles;
  TargetSchedule schedule;
  ForceScript forces;
  std::vector<ViaEvent> via_events;
};

}  // namespace dmpp
