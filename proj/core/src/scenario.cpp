#include "dmpp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "dmpp/errors.hpp"
#include "dmpp/toml_lite.hpp"

namespace dmpp {

namespace {

using nlohmann::json;

double min_jerk_blend(double u) {
  const double u3 = u * u * u;
  return u3 * (10.0 - 15.0 * u + 6.0 * u * u);
}

double hump(double u) {
  const double a = u * (1.0 - u);
  return 64.0 * a * a * a;
}

double param(const DemoSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Demonstration generate_demo(const DemoSpec& spec) {
  if (spec.samples < 2) throw ArgumentError("demo needs at least two samples");
  if (!(spec.T_f > 0.0)) throw ArgumentError("demo duration must be positive");
  const int m = spec.samples;
  Demonstration demo;
  demo.t = Eigen::VectorXd::LinSpaced(m, 0.0, spec.T_f);

  if (spec.generator == "min_jerk") {
    Eigen::VectorXd a = spec.start.empty() ? Eigen::VectorXd::Zero(1) : to_vec(spec.start);
    Eigen::VectorXd b = spec.goal.empty() ? Eigen::VectorXd::Ones(1) : to_vec(spec.goal);
    if (a.size() != b.size()) throw ArgumentError("min_jerk endpoints disagree on dimension");
    demo.Y.resize(a.size(), m);
    for (int j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / (m - 1);
      demo.Y.col(j) = a + (b - a) * min_jerk_blend(u);
    }
  } else if (spec.generator == "single_hump") {
    const double A = param(spec, "amplitude", 1.0);
    const double d = param(spec, "displacement", 0.01);
    demo.Y.resize(1, m);
    for (int j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / (m - 1);
      demo.Y(0, j) = A * hump(u) + d * min_jerk_blend(u);
    }
  } else if (spec.generator == "s_curve_2d") {
    const double length = param(spec, "length", 0.8);
    const double height = param(spec, "height", 0.15);
    const double rise = param(spec, "rise", 0.0);
    demo.Y.resize(2, m);
    for (int j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / (m - 1);
      const double blend = min_jerk_blend(u);
      demo.Y(0, j) = length * blend;
      demo.Y(1, j) = height * std::sin(2.0 * M_PI * blend) + rise * blend;
    }
  } else if (spec.generator == "helix_slerp_3d") {
    const double twist = param(spec, "twist", 1.0);
    const double wobble = param(spec, "wobble", 1.0);
    const Eigen::Vector3d g(0.4, -0.3, 0.5);
    const Eigen::Vector3d b(0.1, 0.2, -0.1);
    demo.kind = DemoKind::orientation;
    demo.Y.resize(3, m);
    demo.quats.reserve(m);
    for (int j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / (m - 1);
      Eigen::Vector3d eta = twist * g * min_jerk_blend(u) + wobble * b * hump(u);
      demo.Y.col(j) = eta;
      demo.quats.push_back(quat_exp(eta));
    }
  } else {
    throw ArgumentError("unknown demo generator '" + spec.generator + "'");
  }
  validate_demo(demo);
  return demo;
}

namespace {

using toml::Table;
using toml::Value;

double get_num(const Table& t, const std::string& key, double fallback) {
  const Value* v = t.find(key);
  return v ? v->as_double() : fallback;
}

std::string get_str(const Table& t, const std::string& key, const std::string& fallback) {
  const Value* v = t.find(key);
  return v ? v->as_string() : fallback;
}

std::vector<double> get_vec(const Table& t, const std::string& key) {
  const Value* v = t.find(key);
  return v ? v->as_double_array() : std::vector<double>{};
}

std::vector<double> need_vec(const Table& t, const std::string& key,
                             const std::string& where) {
  const Value* v = t.find(key);
  if (!v) throw ParseError("scenario " + where + ": missing '" + key + "'");
  return v->as_double_array();
}

void parse_demo(const Table& t, DemoSpec& d) {
  d.source = get_str(t, "source", d.source);
  d.generator = get_str(t, "generator", d.generator);
  d.samples = static_cast<int>(get_num(t, "samples", d.samples));
  d.T_f = get_num(t, "T_f", d.T_f);
  d.path = get_str(t, "path", d.path);
  d.kind = get_str(t, "kind", d.kind);
  d.start = get_vec(t, "start");
  d.goal = get_vec(t, "goal");
  if (const Table* p = t.find_table("params")) {
    for (const auto& [k, v] : p->values) d.params[k] = v.as_double();
  }
  if (d.source != "generator" && d.source != "csv")
    throw ParseError("scenario demo: source must be 'generator' or 'csv'");
  if (d.source == "csv" && d.path.empty())
    throw ParseError("scenario demo: csv source needs 'path'");
}

void parse_epsilon(const Table& t, EpsilonProfile& e) {
  const std::string profile = get_str(t, "profile", "");
  if (profile == "external") e = EpsilonProfile::external_signal();
  else if (!profile.empty() && profile != "default")
    throw ParseError("scenario epsilon: unknown profile '" + profile + "'");
  e.boundary_pos = get_num(t, "boundary_pos", e.boundary_pos);
  e.boundary_vel = get_num(t, "boundary_vel", e.boundary_vel);
  e.boundary_acc = get_num(t, "boundary_acc", e.boundary_acc);
  e.via = get_num(t, "via", e.via);
  e.state_pos = get_num(t, "state_pos", e.state_pos);
  e.state_vel = get_num(t, "state_vel", e.state_vel);
  e.state_acc = get_num(t, "state_acc", e.state_acc);
}

Obstacle parse_obstacle(const Table& t, size_t idx) {
  const std::string where = "obstacle " + std::to_string(idx);
  const std::string shape = get_str(t, "shape", "");
  Obstacle o;
  if (shape == "ellipsoid") {
    o = make_ellipsoid(to_vec(need_vec(t, "center", where)),
                       to_vec(need_vec(t, "semi_axes", where)),
                       get_num(t, "d0", 1.0), get_num(t, "k_o", 1.0));
  } else if (shape == "plane") {
    o = make_plane(to_vec(need_vec(t, "normal", where)),
                   to_vec(need_vec(t, "point", where)),
                   get_num(t, "d0", 0.05), get_num(t, "k_o", 1.0));
  } else {
    throw ParseError("scenario " + where + ": shape must be 'ellipsoid' or 'plane'");
  }
  o.name = get_str(t, "name", where);
  return o;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  Table root = toml::parse_file(path);

  const Value* ver = root.find("schema_version");
  if (!ver) throw ParseError("scenario: missing schema_version");
  if (ver->as_int() != 1)
    throw ParseError("scenario: unsupported schema_version " +
                     std::to_string(ver->as_int()));

  Scenario sc;
  sc.source_path = path;
  sc.name = get_str(root, "name", "scenario");
  const Value* seed = root.find("seed");
  sc.seed = seed ? static_cast<std::uint64_t>(seed->as_int()) : 0;
  sc.dt = get_num(root, "dt", sc.dt);
  if (const Value* v = root.find("duration")) sc.exec.duration = v->as_double();
  sc.direction = get_str(root, "direction", sc.direction);
  if (sc.direction != "forward" && sc.direction != "reverse")
    throw ParseError("scenario: direction must be 'forward' or 'reverse'");

  const std::string gen = get_str(root, "generalization", "dmpp");
  if (gen == "dmpp") sc.gen = Generalization::dmpp;
  else if (gen == "classical") sc.gen = Generalization::classical;
  else if (gen == "classical+goal_filter") sc.gen = Generalization::classical_goal_filter;
  else throw ParseError("scenario: unknown generalization '" + gen + "'");

  const std::string mode = get_str(root, "history_mode", "preserve-learned");
  if (mode == "preserve-learned") sc.mode = HistoryMode::preserve_learned;
  else if (mode == "adapt-to-external") sc.mode = HistoryMode::adapt_to_external;
  else throw ParseError("scenario: unknown history_mode '" + mode + "'");

  if (const Table* t = root.find_table("demo")) parse_demo(*t, sc.demo);
  if (const Table* t = root.find_table("model")) {
    sc.model.K = static_cast<int>(get_num(*t, "K", sc.model.K));
    sc.model.a_h = get_num(*t, "a_h", sc.model.a_h);
    sc.model.stiffness = get_num(*t, "stiffness", sc.model.stiffness);
    sc.model.damping = get_num(*t, "damping", sc.model.damping);
  }
  if (const Table* t = root.find_table("execution")) {
    sc.exec.y0 = get_vec(*t, "y0");
    sc.exec.goal = get_vec(*t, "goal");
    sc.exec.goal_filter_ag = get_num(*t, "goal_filter_ag", sc.exec.goal_filter_ag);
    sc.exec.phase_stop_ad = get_num(*t, "phase_stop_ad", sc.exec.phase_stop_ad);
    sc.exec.canonical_gain = get_num(*t, "canonical_gain", sc.exec.canonical_gain);
    sc.exec.duration = get_num(*t, "duration", sc.exec.duration);
  }
  if (const Table* t = root.find_table("epsilon")) parse_epsilon(*t, sc.eps);

  if (const auto* evs = root.find_array("target_events")) {
    for (size_t i = 0; i < evs->size(); ++i) {
      TargetEvent ev;
      ev.t = get_num((*evs)[i], "time", -1.0);
      if (ev.t < 0.0)
        throw ParseError("scenario target_event " + std::to_string(i) + ": missing 'time'");
      ev.goal = to_vec(need_vec((*evs)[i], "goal", "target_event " + std::to_string(i)));
      sc.env.schedule.events.push_back(std::move(ev));
    }
    std::sort(sc.env.schedule.events.begin(), sc.env.schedule.events.end(),
              [](const TargetEvent& a, const TargetEvent& b) { return a.t < b.t; });
  }
  if (const Table* t = root.find_table("target_drift")) {
    sc.env.schedule.drift = to_vec(need_vec(*t, "velocity", "target_drift"));
  }

  if (const auto* vias = root.find_array("via_points")) {
    for (size_t i = 0; i < vias->size(); ++i) {
      const Table& t = (*vias)[i];
      ViaEvent ev;
      ev.id = get_str(t, "id", "via" + std::to_string(i));
      ev.t = get_num(t, "time", -1.0);
      ev.s = get_num(t, "phase", -1.0);
      const std::string action = get_str(t, "action", "add");
      if (action == "remove") {
        ev.remove = true;
      } else if (action == "add") {
        ev.point = to_vec(need_vec(t, "point", "via_point " + std::to_string(i)));
      } else {
        throw ParseError("scenario via_point " + std::to_string(i) +
                         ": action must be 'add' or 'remove'");
      }
      sc.env.via_events.push_back(std::move(ev));
    }
  }

  if (const auto* obs = root.find_array("obstacles")) {
    for (size_t i = 0; i < obs->size(); ++i)
      sc.env.obstacles.push_back(parse_obstacle((*obs)[i], i));
  }

  if (const auto* fws = root.find_array("forces")) {
    for (size_t i = 0; i < fws->size(); ++i) {
      const Table& t = (*fws)[i];
      ForceWindow w;
      w.t_start = get_num(t, "t_start", 0.0);
      w.t_end = get_num(t, "t_end", -1.0);
      if (!(w.t_end > w.t_start))
        throw ParseError("scenario force " + std::to_string(i) + ": needs t_end > t_start");
      w.value = to_vec(need_vec(t, "value", "force " + std::to_string(i)));
      sc.env.forces.windows.push_back(std::move(w));
    }
  }
  return sc;
}

DmpModel build_model(const Scenario& sc) {
  Demonstration demo;
  if (sc.demo.source == "csv") {
    demo = load_demo_csv(sc.demo.path);
  } else {
    demo = generate_demo(sc.demo);
  }
  TrainOptions opts;
  opts.stiffness = sc.model.stiffness;
  opts.damping = sc.model.damping;
  return train_ls(demo, sc.model.K, sc.model.a_h, opts);
}

RolloutOptions rollout_options(const Scenario& sc, const RunOverrides& ov) {
  RolloutOptions opts;
  opts.dt = ov.dt > 0.0 ? ov.dt : sc.dt;
  opts.duration = ov.duration > 0.0 ? ov.duration : sc.exec.duration;
  opts.reverse = (sc.direction == "reverse") != ov.reverse;
  opts.gen = ov.has_gen ? ov.gen : sc.gen;
  opts.mode = sc.mode;
  opts.eps = sc.eps;
  opts.canonical_gain = sc.exec.canonical_gain;
  opts.goal_filter_ag = sc.exec.goal_filter_ag;
  opts.phase_stop_ad = sc.exec.phase_stop_ad;
  if (!sc.exec.y0.empty()) opts.y0 = to_vec(sc.exec.y0);
  if (!sc.exec.goal.empty()) opts.goal = to_vec(sc.exec.goal);
  if (opts.reverse) std::swap(opts.y0, opts.goal);
  opts.W_init = ov.W_init;
  opts.collect_debug = ov.collect_debug;
  return opts;
}

Trajectory run_scenario(const DmpModel& model, const Scenario& sc, const RunOverrides& ov) {
  Environment env = sc.env;
  RolloutOptions opts = rollout_options(sc, ov);
  if (opts.gen != Generalization::dmpp) env.via_events.clear();
  return run_rollout(model, env, opts);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  const int n = static_cast<int>(traj.y.cols());
  out << "t,s,s_dot";
  auto cols = [&](const std::string& prefix) {
    for (int d = 0; d < n; ++d) out << "," << prefix << d;
  };
  cols("y");
  cols("dy");
  cols("ddy");
  cols("ys");
  cols("u");
  out << ",residual,state_residual";
  if (traj.kind == DemoKind::orientation) out << ",qw,qx,qy,qz,qsw,qsx,qsy,qsz";
  out << "\n";
  for (int k = 0; k < traj.rows(); ++k) {
    out << traj.t[k] << "," << traj.s[k] << "," << traj.s_dot[k];
    auto row = [&](const Eigen::MatrixXd& M) {
      for (int d = 0; d < n; ++d) out << "," << M(k, d);
    };
    row(traj.y);
    row(traj.dy);
    row(traj.ddy);
    row(traj.y_s);
    row(traj.u);
    out << "," << traj.residual[k] << "," << traj.state_residual[k];
    if (traj.kind == DemoKind::orientation) {
      const UnitQuaternion& q = traj.q[k];
      const UnitQuaternion& qs = traj.q_s[k];
      out << "," << q.w << "," << q.x << "," << q.y << "," << q.z;
      out << "," << qs.w << "," << qs.x << "," << qs.y << "," << qs.z;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

namespace {
json finite_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}
}  // namespace

void write_metrics_json(const Trajectory& traj, const Scenario& sc,
                        const std::string& label, const std::string& path) {
  const RolloutMetrics& m = traj.metrics;
  json j;
  j["scenario"] = sc.name;
  j["label"] = label;
  j["seed"] = sc.seed;
  j["dt"] = sc.dt;
  j["steps"] = m.steps;
  j["final_goal_error"] = finite_or_null(m.final_goal_error);
  j["max_abs_acc"] = finite_or_null(m.max_abs_acc);
  j["min_obstacle_value"] = finite_or_null(m.min_obstacle_value);
  j["max_force"] = finite_or_null(m.max_force);
  j["max_residual"] = finite_or_null(m.max_residual);
  j["max_state_residual"] = finite_or_null(m.max_state_residual);
  j["adapt_mean_ms"] = m.adapt_mean_ms;
  j["adapt_p99_ms"] = m.adapt_p99_ms;
  j["adapt_max_ms"] = m.adapt_max_ms;
  j["wall_ms"] = m.wall_ms;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_debug_jsonl(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const DebugTick& d : traj.debug) {
    json j;
    j["t"] = d.t;
    j["s"] = d.s;
    j["state_applied"] = d.state_applied;
    j["goal_changed"] = d.goal_changed;
    j["vias_active"] = d.vias_active;
    j["state_residual"] = d.state_residual;
    j["w_norm"] = d.w_norm;
    out << j.dump() << "\n";
  }
}

}  // namespace dmpp
