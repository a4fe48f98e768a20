#include <benchmark/benchmark.h>

#include "dmpp/adaptation.hpp"
#include "dmpp/scenario.hpp"

namespace {

dmpp::DmpModel make_model(int K, int dims) {
  dmpp::DemoSpec spec;
  spec.generator = "min_jerk";
  spec.start.assign(dims, 0.0);
  spec.goal.assign(dims, 1.0);
  spec.samples = std::max(4 * K, 200);
  return dmpp::train_ls(dmpp::generate_demo(spec), K);
}

void BM_BasisEval(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  dmpp::BasisModel basis = dmpp::new_basis(K);
  Eigen::VectorXd p(K), dp(K), ddp(K);
  double s = 0.0;
  for (auto _ : state) {
    basis.eval(s, p, dp, ddp);
    benchmark::DoNotOptimize(p.data());
    s += 1e-4;
    if (s > 1.0) s = 0.0;
  }
}
BENCHMARK(BM_BasisEval)->Arg(10)->Arg(30)->Arg(80);

void BM_AdaptStep(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const int dims = 6;
  dmpp::DmpModel model = make_model(K, dims);
  dmpp::AdaptationState st =
      dmpp::init_adaptation(model, model.demo_start, model.demo_goal);
  Eigen::MatrixXd goal = Eigen::MatrixXd::Zero(dims, 3);
  goal.col(0) = model.demo_goal;
  double s = 0.0;
  const double ds = 1e-2;
  for (auto _ : state) {
    dmpp::StepInput in;
    in.s_prev = s;
    s += ds;
    if (s >= 1.0) s = ds;
    in.s = s;
    goal(0, 0) += 1e-6;
    in.goal = goal;
    in.want_state = true;
    st.step(in);
    benchmark::DoNotOptimize(st.W().data());
  }
}
BENCHMARK(BM_AdaptStep)->Arg(10)->Arg(30)->Arg(50)->Arg(80);

void BM_Reference(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  dmpp::DmpModel model = make_model(K, 6);
  double s = 0.0;
  for (auto _ : state) {
    dmpp::StateTriplet ref = dmpp::evaluate_reference(model, model.W0, s, 1.0, 0.0);
    benchmark::DoNotOptimize(ref.y.data());
    s += 1e-4;
    if (s > 1.0) s = 0.0;
  }
}
BENCHMARK(BM_Reference)->Arg(10)->Arg(30)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
