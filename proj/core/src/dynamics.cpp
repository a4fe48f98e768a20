#include "dmpp/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

Eigen::MatrixXd goal_triplet(const Eigen::VectorXd& g) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(g.size(), 3);
  t.col(0) = g;
  return t;
}

struct ViaFire {
  std::vector<ViaPoint> add;
  std::vector<std::string> remove;
};

// Fires due via events; unassigned phases come from the closest-point
// heuristic against the current reference.
ViaFire collect_via_events(const std::vector<ViaEvent>& events, std::vector<char>& fired,
                           double t, double s_now, const DmpModel& model,
                           const Eigen::MatrixXd& W) {
  ViaFire out;
  for (size_t j = 0; j < events.size(); ++j) {
    if (fired[j]) continue;
    const ViaEvent& ev = events[j];
    const double fire_t = ev.t >= 0.0 ? ev.t : 0.0;
    if (t < fire_t) continue;
    fired[j] = 1;
    if (ev.remove) {
      out.remove.push_back(ev.id);
      continue;
    }
    ViaPoint vp;
    vp.id = ev.id;
    vp.y_v = ev.point;
    vp.s_v = ev.s >= 0.0 ? ev.s : via_phase_heuristic(model, W, s_now, ev.point);
    out.add.push_back(std::move(vp));
  }
  return out;
}

}  // namespace

Trajectory run_rollout(const DmpModel& model, const Environment& env,
                       const RolloutOptions& opts) {
  const bool rot = model.kind == DemoKind::orientation;
  const int n = model.n;

  if (!(opts.dt > 0.0) || !std::isfinite(opts.dt))
    throw ArgumentError("dt must be positive");
  const double duration = opts.duration > 0.0 ? opts.duration : model.T_f;
  const long steps = std::lround(duration / opts.dt);
  if (steps < 1) throw ArgumentError("duration must cover at least one step");
  if (rot && !env.obstacles.empty())
    throw ArgumentError("obstacles apply to position models");
  if (opts.reverse && opts.gen != Generalization::dmpp)
    throw ArgumentError("reverse execution requires the adaptive reference");

  Eigen::VectorXd y0 = opts.y0.size() > 0
                           ? opts.y0
                           : (opts.reverse ? model.demo_goal : model.demo_start);
  Eigen::VectorXd g_static = opts.goal.size() > 0
                                 ? opts.goal
                                 : (opts.reverse ? model.demo_start : model.demo_goal);
  if (y0.size() != n || g_static.size() != n)
    throw ArgumentError("start/goal dimension does not match the model");

  TargetSchedule sched = env.schedule;
  if (sched.initial.size() == 0) sched.initial = g_static;
  if (sched.initial.size() != n)
    throw ArgumentError("target schedule dimension does not match the model");
  for (const TargetEvent& ev : sched.events)
    if (ev.goal.size() != n)
      throw ArgumentError("target event dimension does not match the model");
  if (sched.drift.size() > 0 && sched.drift.size() != n)
    throw ArgumentError("target drift dimension does not match the model");
  auto goal_at = [&](double t) { return sched.goal_at(t); };

  // Canonical system: nominal rate covers [0,1] in the demonstrated time.
  const double s1 = (opts.reverse ? -1.0 : 1.0) / model.T_f;
  const double start_phase = opts.reverse ? 1.0 : 0.0;
  double s = start_phase, sd = s1, sdd = 0.0;
  double s_prev = s, sd_prev = sd, sdd_prev = 0.0;
  bool phase_done = false;

  const bool engaged =
      opts.gen == Generalization::dmpp &&
      (opts.mode == HistoryMode::adapt_to_external || env.schedule.varies() ||
       !env.via_events.empty());

  AdaptationState adapt;
  ClassicalReference classical;
  double static_residual = 0.0;
  if (opts.gen == Generalization::dmpp) {
    adapt = init_adaptation(model, y0, goal_at(0.0), opts.eps, opts.mode, opts.adapt_cfg,
                            opts.W_init, start_phase);
    static_residual = adapt.residuals().max_active();
  } else {
    if (!env.via_events.empty())
      throw ArgumentError("classical generalization cannot honor via-point events");
    classical = make_classical(model, y0);
  }
  Eigen::VectorXd g_hat = goal_at(0.0);

  const double mass = opts.coupling_mass > 0.0 ? opts.coupling_mass : (rot ? 2.0 : 5.0);

  // Integrated state.
  Eigen::VectorXd y = y0;
  Eigen::VectorXd dy = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ddy = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd dy_prev = dy, ddy_prev = ddy;
  UnitQuaternion q, q_goal;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d eta_prev = Eigen::Vector3d::Zero(), eta_dot_prev = Eigen::Vector3d::Zero(),
                  eta_ddot_prev = Eigen::Vector3d::Zero();
  if (rot) {
    q = quat_exp(y0);
    q_goal = quat_exp(g_static);
    eta_prev = y0;
  }

  const long ticks = steps + 1;
  Trajectory traj;
  traj.kind = model.kind;
  traj.t.reserve(ticks);
  traj.s.reserve(ticks);
  traj.s_dot.reserve(ticks);
  traj.y.resize(ticks, n);
  traj.dy.resize(ticks, n);
  traj.ddy.resize(ticks, n);
  traj.y_s.resize(ticks, n);
  traj.u.resize(ticks, n);
  traj.residual.reserve(ticks);
  traj.state_residual.reserve(ticks);
  if (rot) {
    traj.q.reserve(ticks);
    traj.q_s.reserve(ticks);
  }

  std::vector<char> fired(env.via_events.size(), 0);
  RolloutMetrics& met = traj.metrics;
  met.steps = static_cast<int>(steps);

  const auto wall0 = std::chrono::steady_clock::now();
  for (long k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * opts.dt;
    const Eigen::VectorXd g_now = goal_at(t);

    // 1. adaptation
    StepReport rep;
    double resid_bgv = 0.0;
    if (opts.gen == Generalization::dmpp) {
      if (engaged) {
        ViaFire due = collect_via_events(env.via_events, fired, t, s, model, adapt.W());
        StepInput in;
        in.s = s;
        in.s_prev = s_prev;
        in.goal = goal_triplet(g_now);
        in.via_add = std::move(due.add);
        in.via_remove = std::move(due.remove);
        const double rate_floor = opts.state_rate_floor * std::abs(s1);
        if (k > 0) {
          if (opts.mode == HistoryMode::preserve_learned) {
            in.want_state = true;
          } else if (std::abs(sd) >= rate_floor && std::abs(sd_prev) >= rate_floor) {
            in.want_state = true;
            if (rot) {
              // Measured rotation-vector state from the integrated quaternion.
              Eigen::Vector3d eta_m = quat_log(q);
              Eigen::Vector3d eta_dot_m, eta_ddot_unused;
              eta_from_omega(q, omega, Eigen::Vector3d::Zero(), eta_dot_m, eta_ddot_unused);
              in.y = eta_m;
              in.dy_phase = eta_dot_m / sd;
              in.ddy_phase_prev =
                  (eta_ddot_prev - eta_dot_prev / sd_prev * sdd_prev) / (sd_prev * sd_prev);
            } else {
              in.y = y;
              in.dy_phase = dy / sd;
              in.ddy_phase_prev =
                  (ddy_prev - dy_prev / sd_prev * sdd_prev) / (sd_prev * sd_prev);
            }
          }
        }
        const auto a0 = std::chrono::steady_clock::now();
        rep = adapt.step(in);
        const auto a1 = std::chrono::steady_clock::now();
        traj.adapt_ms.push_back(std::chrono::duration<double, std::milli>(a1 - a0).count());
        resid_bgv = adapt.residuals().max_active();
      } else {
        resid_bgv = static_residual;
      }
    }

    // 2. canonical acceleration; scripted contact force can stall the phase
    const Eigen::VectorXd f_script = env.forces.force_at(t, n);
    if (phase_done) {
      sdd = 0.0;
    } else {
      const double sd_des = s1 / (1.0 + opts.phase_stop_ad * f_script.norm());
      sdd = opts.canonical_gain * (sd_des - sd);
    }

    // 3. reference
    StateTriplet ref;
    if (opts.gen == Generalization::dmpp) {
      ref = evaluate_reference(model, adapt.W(), s, sd, sdd);
    } else {
      g_hat = opts.gen == Generalization::classical_goal_filter
                  ? goal_filter_step(g_hat, g_now, opts.goal_filter_ag, opts.dt)
                  : g_now;
      ref = classical_eval(classical, g_hat, s, sd, sdd);
    }

    // 4. coupling
    Eigen::VectorXd f = f_script;
    if (!rot) f += total_repulsive_force(env.obstacles, y);
    const double fmag = f.norm();
    const double alpha = std::sqrt(std::min(2.0 * fmag, 1.0));
    Eigen::VectorXd u = f / mass - alpha * ref.ddy;

    // 5. transformation acceleration
    Eigen::Vector3d omega_s = Eigen::Vector3d::Zero(), omega_dot_s = Eigen::Vector3d::Zero();
    Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
    UnitQuaternion q_s;
    if (rot) {
      omega_from_eta(ref.y, ref.dy, ref.ddy, omega_s, omega_dot_s);
      q_s = quat_exp(ref.y);
      u = f / mass - alpha * omega_dot_s;
      const Eigen::Vector3d err = quat_log(quat_mul(q, q_s.conj()));
      omega_dot = omega_dot_s - model.damping * (omega - omega_s) - model.stiffness * err +
                  Eigen::Vector3d(u);
      ddy = omega_dot;
    } else {
      ddy = ref.ddy - model.damping * (dy - ref.dy) - model.stiffness * (y - ref.y) + u;
    }

    // record the state at t_k
    traj.t.push_back(t);
    traj.s.push_back(s);
    traj.s_dot.push_back(sd);
    if (rot) {
      traj.y.row(k) = quat_log(q).transpose();
      traj.dy.row(k) = omega.transpose();
      traj.ddy.row(k) = omega_dot.transpose();
      traj.q.push_back(q);
      traj.q_s.push_back(q_s);
    } else {
      traj.y.row(k) = y.transpose();
      traj.dy.row(k) = dy.transpose();
      traj.ddy.row(k) = ddy.transpose();
    }
    traj.y_s.row(k) = ref.y.transpose();
    traj.u.row(k) = u.transpose();
    traj.residual.push_back(resid_bgv);
    traj.state_residual.push_back(rep.state_residual);
    if (opts.collect_debug) {
      DebugTick d;
      d.t = t;
      d.s = s;
      d.state_applied = rep.state_applied;
      d.goal_changed = rep.goal_changed;
      d.vias_active = opts.gen == Generalization::dmpp
                          ? static_cast<int>(adapt.vias().size())
                          : 0;
      d.state_residual = rep.state_residual;
      d.w_norm = opts.gen == Generalization::dmpp ? adapt.W().norm() : model.W0.norm();
      traj.debug.push_back(d);
    }

    met.max_abs_acc = std::max(met.max_abs_acc, traj.ddy.row(k).cwiseAbs().maxCoeff());
    met.max_force = std::max(met.max_force, fmag);
    met.max_residual = std::max(met.max_residual, resid_bgv);
    met.max_state_residual = std::max(met.max_state_residual, rep.state_residual);
    if (!rot && !env.obstacles.empty())
      met.min_obstacle_value =
          std::min(met.min_obstacle_value, min_surface_value(env.obstacles, y));

    if (k == ticks - 1) break;

    // carry this tick as "previous" for the next state constraint
    s_prev = s;
    sd_prev = sd;
    sdd_prev = sdd;
    if (rot) {
      if (opts.mode == HistoryMode::adapt_to_external) {
        eta_prev = quat_log(q);
        eta_from_omega(q, omega, omega_dot, eta_dot_prev, eta_ddot_prev);
      }
    } else {
      dy_prev = dy;
      ddy_prev = ddy;
    }

    // 6. semi-implicit integration
    if (rot) {
      omega += opts.dt * omega_dot;
      q = quat_mul(quat_exp(opts.dt * omega), q).normalized();
    } else {
      dy += opts.dt * ddy;
      y += opts.dt * dy;
      if (!y.allFinite()) throw EnvironmentError("trajectory diverged");
    }
    if (!phase_done) {
      sd += opts.dt * sdd;
      s += opts.dt * sd;
      if (!opts.reverse && s >= 1.0) {
        s = 1.0;
        sd = 0.0;
        phase_done = true;
      } else if (opts.reverse && s <= 0.0) {
        s = 0.0;
        sd = 0.0;
        phase_done = true;
      }
    }
  }
  const auto wall1 = std::chrono::steady_clock::now();
  met.wall_ms = std::chrono::duration<double, std::milli>(wall1 - wall0).count();

  if (rot) {
    const Eigen::VectorXd g_end = goal_at(duration);
    met.final_goal_error = quat_log(quat_mul(q, quat_exp(g_end).conj())).norm();
  } else {
    met.final_goal_error = (y - goal_at(duration)).norm();
  }
  if (!traj.adapt_ms.empty()) {
    double sum = 0.0, mx = 0.0;
    for (double v : traj.adapt_ms) {
      sum += v;
      mx = std::max(mx, v);
    }
    met.adapt_mean_ms = sum / static_cast<double>(traj.adapt_ms.size());
    met.adapt_max_ms = mx;
    met.adapt_p99_ms = percentile(traj.adapt_ms, 0.99);
  }
  traj.W_final = opts.gen == Generalization::dmpp ? adapt.W() : model.W0;
  return traj;
}

}  // namespace dmpp
