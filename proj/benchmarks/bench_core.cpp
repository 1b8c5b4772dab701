#include "fixtures.hpp"

#include "lily/estimator/elbo.hpp"
#include "lily/estimator/model.hpp"
#include "lily/numerics/assignment.hpp"
#include "lily/numerics/rank.hpp"
#include "lily/numerics/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace lily;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_GradElbo(benchmark::State& state) {
  estimator::ModelConfig c;
  c.obs_dim = 8;
  c.partition = {8, 0, 0};
  const estimator::ModelParams p = estimator::init_params(c, 1);
  const estimator::WindowBatch batch = testing::random_batch(p, static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(estimator::grad_elbo(batch, p, {}).value.total);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GradElbo)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Assignment(benchmark::State& state) {
  const Matrix cost = random_matrix(state.range(0), state.range(0), 3).cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost));
}
BENCHMARK(BM_Assignment)->Arg(8)->Arg(64)->Arg(256);

void BM_Rank(benchmark::State& state) {
  const Matrix m = random_matrix(2 * state.range(0), 8 * state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(rank_with_tolerance(m).numeric_rank);
}
BENCHMARK(BM_Rank)->Arg(8)->Arg(16);

}  // namespace
BENCHMARK_MAIN();
