#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dmpp/dynamics.hpp"
#include "dmpp/model.hpp"

namespace dmpp {

struct DemoSpec {
  std::string source = "generator";  // generator | csv
  std::string generator = "min_jerk";
  std::map<std::string, double> params;
  std::vector<double> start, goal;  // min_jerk endpoints
  int samples = 201;
  double T_f = 1.0;
  std::string path;                  // csv source
  std::string kind = "position";     // position | orientation
};

struct ModelSpec {
  int K = 30;
  double a_h = 1.5;
  double stiffness = 300.0;
  double damping = -1.0;
};

struct ExecSpec {
  std::vector<double> y0, goal;  // empty selects demo endpoints
  double goal_filter_ag = 4.0;
  double phase_stop_ad = 0.0;
  double canonical_gain = 40.0;
  double duration = -1.0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double dt = 0.002;
  std::string direction = "forward";
  Generalization gen = Generalization::dmpp;
  HistoryMode mode = HistoryMode::preserve_learned;
  DemoSpec demo;
  ModelSpec model;
  ExecSpec exec;
  EpsilonProfile eps;
  Environment env;
  std::string source_path;
};

Scenario load_scenario(const std::string& path);

// Deterministic synthetic demonstrations.
Demonstration generate_demo(const DemoSpec& spec);

DmpModel build_model(const Scenario& sc);

struct RunOverrides {
  double dt = -1.0;
  double duration = -1.0;
  bool reverse = false;           // flips the scenario direction
  bool collect_debug = false;
  const Eigen::MatrixXd* W_init = nullptr;
  bool has_gen = false;
  Generalization gen = Generalization::dmpp;
};

RolloutOptions rollout_options(const Scenario& sc, const RunOverrides& ov = {});
Trajectory run_scenario(const DmpModel& model, const Scenario& sc,
                        const RunOverrides& ov = {});

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_metrics_json(const Trajectory& traj, const Scenario& sc,
                        const std::string& label, const std::string& path);
void write_debug_jsonl(const Trajectory& traj, const std::string& path);

}  // namespace dmpp
