#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmpp/bench.hpp"
#include "dmpp/errors.hpp"
#include "dmpp/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const dmpp::ParseError*>(&e)) return "parse";
  if (dynamic_cast<const dmpp::ArgumentError*>(&e)) return "argument";
  if (dynamic_cast<const dmpp::TrainingError*>(&e)) return "training";
  if (dynamic_cast<const dmpp::ConditioningError*>(&e)) return "conditioning";
  if (dynamic_cast<const dmpp::DowndateError*>(&e)) return "downdate";
  if (dynamic_cast<const dmpp::EnvironmentError*>(&e)) return "environment";
  if (dynamic_cast<const dmpp::OracleError*>(&e)) return "oracle";
  if (dynamic_cast<const dmpp::IoError*>(&e)) return "io";
  return "internal";
}

struct CommonFlags {
  std::string out_dir = "out";
  double dt = -1.0;
  std::int64_t seed = -1;
  bool dump_debug = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--out-dir", f.out_dir, "Directory for generated files");
  cmd->add_option("--dt", f.dt, "Integration step override, seconds");
  cmd->add_option("--seed", f.seed, "Seed recorded in outputs");
  cmd->add_flag("--dump-debug", f.dump_debug, "Write per-tick debug records (JSONL)");
}

dmpp::Scenario load_with_overrides(const std::string& path, const CommonFlags& f) {
  dmpp::Scenario sc = dmpp::load_scenario(path);
  if (f.dt > 0.0) sc.dt = f.dt;
  if (f.seed >= 0) sc.seed = static_cast<std::uint64_t>(f.seed);
  return sc;
}

std::string label_for(dmpp::Generalization g) {
  switch (g) {
    case dmpp::Generalization::dmpp: return "dmpp";
    case dmpp::Generalization::classical: return "classical";
    case dmpp::Generalization::classical_goal_filter: return "classical_goal_filter";
  }
  return "unknown";
}

json run_and_write(const dmpp::DmpModel& model, const dmpp::Scenario& sc,
                   const dmpp::RunOverrides& ov, const fs::path& dir,
                   const std::string& label) {
  dmpp::Trajectory traj = dmpp::run_scenario(model, sc, ov);
  const std::string suffix = label.empty() ? "" : "_" + label;
  dmpp::write_trajectory_csv(traj, (dir / ("trajectory" + suffix + ".csv")).string());
  dmpp::write_metrics_json(traj, sc, label.empty() ? "dmpp" : label,
                           (dir / ("metrics" + suffix + ".json")).string());
  if (ov.collect_debug)
    dmpp::write_debug_jsonl(traj, (dir / ("debug" + suffix + ".jsonl")).string());
  json j;
  j["label"] = label.empty() ? "dmpp" : label;
  j["final_goal_error"] = traj.metrics.final_goal_error;
  j["max_abs_acc"] = traj.metrics.max_abs_acc;
  j["max_force"] = traj.metrics.max_force;
  j["max_residual"] = traj.metrics.max_residual;
  j["steps"] = traj.metrics.steps;
  j["wall_ms"] = traj.metrics.wall_ms;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Movement-primitive scenario simulator"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a model from a demo or scenario");
  std::string train_scenario, train_demo, train_out = "model.json";
  int train_K = 30;
  double train_ah = 1.5, train_stiffness = 300.0, train_damping = -1.0;
  CommonFlags train_flags;
  train->add_option("--scenario", train_scenario, "Scenario TOML supplying the demo");
  train->add_option("--demo", train_demo, "Demo CSV file");
  train->add_option("--K", train_K, "Number of basis functions");
  train->add_option("--a-h", train_ah, "Basis width factor");
  train->add_option("--stiffness", train_stiffness, "Transformation stiffness");
  train->add_option("--damping", train_damping, "Transformation damping (<0: critical)");
  train->add_option("--out", train_out, "Output model file");
  add_common(train, train_flags);

  // run
  auto* run = app.add_subcommand("run", "Execute a scenario");
  std::string run_scenario, run_model;
  bool run_reverse = false, run_save_model = false;
  double run_duration = -1.0;
  CommonFlags run_flags;
  run->add_option("--scenario", run_scenario, "Scenario TOML")->required();
  run->add_option("--model", run_model, "Pretrained model JSON (skips training)");
  run->add_flag("--reverse", run_reverse, "Flip the execution direction");
  run->add_option("--duration", run_duration, "Execution time override, seconds");
  run->add_flag("--save-model", run_save_model, "Also write the trained model");
  add_common(run, run_flags);

  // compare
  auto* cmp = app.add_subcommand("compare", "Run adaptive and classical references");
  std::string cmp_scenario;
  CommonFlags cmp_flags;
  cmp->add_option("--scenario", cmp_scenario, "Scenario TOML")->required();
  add_common(cmp, cmp_flags);

  // bench
  auto* bench = app.add_subcommand("bench", "Time the adaptation step");
  std::vector<int> bench_K{10, 20, 40, 80};
  int bench_steps = 300, bench_dims = 6;
  CommonFlags bench_flags;
  bench->add_option("--K", bench_K, "Basis sizes to sweep");
  bench->add_option("--steps", bench_steps, "Adaptation steps per size");
  bench->add_option("--dims", bench_dims, "Reference dimensions");
  add_common(bench, bench_flags);

  // validate
  auto* val = app.add_subcommand("validate", "Parse a scenario and train its model");
  std::string val_scenario;
  CommonFlags val_flags;
  val->add_option("--scenario", val_scenario, "Scenario TOML")->required();
  add_common(val, val_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      fs::create_directories(train_flags.out_dir);
      dmpp::DmpModel model;
      if (!train_scenario.empty()) {
        dmpp::Scenario sc = load_with_overrides(train_scenario, train_flags);
        sc.model.K = train_K;
        sc.model.a_h = train_ah;
        sc.model.stiffness = train_stiffness;
        sc.model.damping = train_damping;
        model = dmpp::build_model(sc);
      } else if (!train_demo.empty()) {
        dmpp::Demonstration demo = dmpp::load_demo_csv(train_demo);
        dmpp::TrainOptions opts;
        opts.stiffness = train_stiffness;
        opts.damping = train_damping;
        model = dmpp::train_ls(demo, train_K, train_ah, opts);
      } else {
        throw dmpp::ArgumentError("train needs --scenario or --demo");
      }
      const fs::path out = fs::path(train_flags.out_dir) / train_out;
      dmpp::save_model_json(model, out.string());
      json j;
      j["model"] = out.string();
      j["K"] = model.K();
      j["n"] = model.n;
      j["train_residual"] = model.train_residual;
      std::cout << j.dump(2) << "\n";
    } else if (*run) {
      fs::create_directories(run_flags.out_dir);
      dmpp::Scenario sc = load_with_overrides(run_scenario, run_flags);
      dmpp::DmpModel model =
          run_model.empty() ? dmpp::build_model(sc) : dmpp::load_model_json(run_model);
      dmpp::RunOverrides ov;
      ov.reverse = run_reverse;
      ov.duration = run_duration;
      ov.collect_debug = run_flags.dump_debug;
      json j = run_and_write(model, sc, ov, run_flags.out_dir, "");
      if (run_save_model)
        dmpp::save_model_json(model, (fs::path(run_flags.out_dir) / "model.json").string());
      std::cout << j.dump(2) << "\n";
    } else if (*cmp) {
      fs::create_directories(cmp_flags.out_dir);
      dmpp::Scenario sc = load_with_overrides(cmp_scenario, cmp_flags);
      dmpp::DmpModel model = dmpp::build_model(sc);
      json out = json::array();
      std::vector<dmpp::Generalization> gens{dmpp::Generalization::dmpp,
                                             dmpp::Generalization::classical};
      if (sc.env.schedule.varies())
        gens.push_back(dmpp::Generalization::classical_goal_filter);
      for (dmpp::Generalization g : gens) {
        dmpp::RunOverrides ov;
        ov.has_gen = true;
        ov.gen = g;
        ov.collect_debug = cmp_flags.dump_debug;
        out.push_back(run_and_write(model, sc, ov, cmp_flags.out_dir, label_for(g)));
      }
      std::ofstream f((fs::path(cmp_flags.out_dir) / "compare.json").string());
      f << out.dump(2) << "\n";
      std::cout << out.dump(2) << "\n";
    } else if (*bench) {
      fs::create_directories(bench_flags.out_dir);
      const std::uint64_t seed =
          bench_flags.seed >= 0 ? static_cast<std::uint64_t>(bench_flags.seed) : 0;
      dmpp::BenchReport rep =
          dmpp::bench_adaptation(bench_K, bench_steps, bench_dims, seed);
      json j;
      j["rows"] = json::array();
      std::cout << "K\tmean_ms\tp99_ms\tmax_ms\n";
      for (const dmpp::BenchRow& r : rep.rows) {
        std::cout << r.K << "\t" << r.mean_ms << "\t" << r.p99_ms << "\t" << r.max_ms
                  << "\n";
        j["rows"].push_back({{"K", r.K},
                             {"mean_ms", r.mean_ms},
                             {"p99_ms", r.p99_ms},
                             {"max_ms", r.max_ms}});
      }
      std::cout << "fit_exponent\t" << rep.fit_exponent << "\n";
      j["fit_exponent"] = rep.fit_exponent;
      std::ofstream f((fs::path(bench_flags.out_dir) / "bench.json").string());
      f << j.dump(2) << "\n";
    } else if (*val) {
      dmpp::Scenario sc = load_with_overrides(val_scenario, val_flags);
      dmpp::DmpModel model = dmpp::build_model(sc);
      json j;
      j["scenario"] = sc.name;
      j["valid"] = true;
      j["K"] = model.K();
      j["n"] = model.n;
      j["kind"] = model.kind == dmpp::DemoKind::orientation ? "orientation" : "position";
      j["T_f"] = model.T_f;
      j["train_residual"] = model.train_residual;
      j["obstacles"] = sc.env.obstacles.size();
      j["via_events"] = sc.env.via_events.size();
      j["target_events"] = sc.env.schedule.events.size();
      std::cout << j.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    json err;
    err["error"] = error_kind(e);
    err["message"] = e.what();
    std::cerr << err.dump(2) << "\n";
    return 1;
  }
  return 0;
}
