#include <benchmark/benchmark.h>

#include <random>

#include "localprop/algos.hpp"
#include "localprop/init.hpp"
#include "localprop/optim.hpp"

using namespace localprop;

namespace {

struct Problem {
  NetworkParams params;
  Matrix x;
  Matrix y;
};

// 784 -> depth x 256 tanh -> 10 softmax on a random batch of 50.
Problem make_problem(Algorithm a, int depth) {
  Problem p;
  p.params = init_params(mlp_specs(784, 256, depth, 10), InitScheme::fan_in_fan_out(), 1, feedback_layout(a));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  p.x.resize(50, 784);
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = u(rng);
  p.y = Matrix::Zero(50, 10);
  for (Eigen::Index r = 0; r < 50; ++r) p.y(r, r % 10) = 1.0;
  return p;
}

void BM_AssignCredit(benchmark::State& state) {
  const auto a = static_cast<Algorithm>(state.range(0));
  const auto p = make_problem(a, static_cast<int>(state.range(1)));
  const AlgoConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto ca = assign_credit(a, p.params, p.x, p.y, cfg, seed++);
    benchmark::DoNotOptimize(ca.updates.weights.front().data());
  }
  state.SetLabel(std::string(to_string(a)));
  state.SetItemsProcessed(state.iterations() * p.x.rows());
}

void BM_TrainStep(benchmark::State& state) {
  const auto a = static_cast<Algorithm>(state.range(0));
  auto p = make_problem(a, 3);
  OptimSettings settings;
  settings.rule = static_cast<OptimRule>(state.range(1));
  settings.step = 1e-4;
  OptimState optim = make_optimizer(settings, p.params);
  const AlgoConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto ca = assign_credit(a, p.params, p.x, p.y, cfg, seed++);
    apply_update(optim, p.params, ca.updates);
  }
  state.SetLabel(std::string(to_string(a)) + "/" + to_string(settings.rule));
}

void all_algorithms(benchmark::internal::Benchmark* b) {
  for (int a = 0; a <= static_cast<int>(Algorithm::Dfa); ++a) {
    for (int depth : {3, 8}) b->Args({a, depth});
  }
}

}  // namespace

BENCHMARK(BM_AssignCredit)->Apply(all_algorithms)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStep)
    ->Args({static_cast<int>(Algorithm::LraE), static_cast<int>(OptimRule::Sgd)})
    ->Args({static_cast<int>(Algorithm::DtpSigma), static_cast<int>(OptimRule::RmsProp)})
    ->Args({static_cast<int>(Algorithm::LraE), static_cast<int>(OptimRule::Adam)})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
