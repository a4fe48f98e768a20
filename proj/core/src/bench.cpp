#include "dmpp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "dmpp/adaptation.hpp"
#include "dmpp/errors.hpp"
#include "dmpp/scenario.hpp"

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

}  // namespace

BenchReport bench_adaptation(const std::vector<int>& basis_sizes, int steps, int dims,
                             std::uint64_t seed) {
  if (dims < 1) throw ArgumentError("dims must be positive");
  BenchReport report;
  if (steps <= 0 || basis_sizes.empty()) return report;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1e-3);

  for (int K : basis_sizes) {
    DemoSpec spec;
    spec.generator = "min_jerk";
    spec.start.assign(dims, 0.0);
    spec.goal.assign(dims, 1.0);
    spec.samples = std::max(4 * K, 200);
    Demonstration demo = generate_demo(spec);
    DmpModel model = train_ls(demo, K);

    AdaptationState st = init_adaptation(model, model.demo_start, model.demo_goal);
    ViaPoint vp;
    vp.id = "bench";
    vp.s_v = 0.9;
    vp.y_v = model.demo_goal * 0.95;
    st.update(via_constraint_block(model, vp, st.eps()));

    std::vector<double> samples;
    samples.reserve(steps);
    const double ds = 1.0 / (steps + 1);
    Eigen::MatrixXd goal = Eigen::MatrixXd::Zero(dims, 3);
    for (int i = 1; i <= steps; ++i) {
      StepInput in;
      in.s = i * ds;
      in.s_prev = (i - 1) * ds;
      goal.col(0) = model.demo_goal.array() + jitter(rng);
      in.goal = goal;
      in.want_state = true;

      const auto a0 = std::chrono::steady_clock::now();
      st.step(in);
      const auto a1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double, std::milli>(a1 - a0).count());
    }

    BenchRow row;
    row.K = K;
    double sum = 0.0;
    for (double v : samples) {
      sum += v;
      row.max_ms = std::max(row.max_ms, v);
    }
    row.mean_ms = sum / static_cast<double>(samples.size());
    row.p99_ms = percentile(samples, 0.99);
    report.rows.push_back(row);
  }

  if (report.rows.size() >= 2) {
    // slope of log(mean) on log(K)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(report.rows.size());
    for (const BenchRow& r : report.rows) {
      const double x = std::log(static_cast<double>(r.K));
      const double y = std::log(r.mean_ms);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.fit_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return report;
}

}  // namespace dmpp
