#include <benchmark/benchmark.h>

#include "mfomo/game_zoo.hpp"
#include "mfomo/lcp.hpp"
#include "mfomo/mfomo.hpp"
#include "mfomo/projections.hpp"
#include "mfomo/solvers.hpp"

using namespace mfomo;

namespace {

std::unique_ptr<GameModel> bench_game() {
  CongregationParams p;
  p.r = Vec::LinSpaced(5, 1.0, 1.5);
  p.T = 10;
  p.C = Vec::Constant(p.T, 0.5);
  return congregation_game(p);
}

ThetaPoint bench_theta(const GameModel& g, std::uint64_t seed) {
  const ThetaBounds bounds = default_bounds(g.S(), g.A(), g.T(), g.r_max());
  Rng rng(seed);
  return sample_feasible(Dims{g.S(), g.A(), g.T()}, bounds, rng);
}

// Two states, two actions, horizon one; three isolated equilibria.
std::unique_ptr<GameModel> enumeration_game() {
  FiniteMdp dyn;
  dyn.S = 2;
  dyn.A = 2;
  dyn.T = 1;
  dyn.mu0 = Vec::Zero(2);
  dyn.mu0(0) = 1.0;
  TransitionKernel kernel(2, Mat::Zero(2, 2));
  for (int a = 0; a < 2; ++a) kernel[a].col(a).setOnes();
  dyn.P = {kernel};
  dyn.r = {Mat::Zero(2, 4).leftCols(2), Mat::Zero(2, 2)};
  std::vector<Mat> rbar = dyn.r;
  std::vector<Mat> Rbar{Mat::Zero(4, 4), Mat::Zero(4, 4)};
  for (int s = 0; s < 2; ++s) Rbar[1](s, s) = 1.0;
  return std::make_unique<LinearRewardGame>(std::move(dyn), std::move(rbar),
                                            std::move(Rbar), 1.0);
}

}  // namespace

static void BM_ProjectSimplex(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(42);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = 2.0 * uniform_pm1(rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(v, 1.0));
}
BENCHMARK(BM_ProjectSimplex)->Range(8, 4096);

static void BM_ProjectTheta(benchmark::State& state) {
  auto g = bench_game();
  const ThetaBounds bounds = default_bounds(g->S(), g->A(), g->T(), g->r_max());
  ThetaPoint th = bench_theta(*g, 1);
  th.y *= 3.0;
  th.z *= 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(project_theta(th, bounds));
}
BENCHMARK(BM_ProjectTheta);

static void BM_Objective(benchmark::State& state) {
  auto g = bench_game();
  const ThetaPoint th = bench_theta(*g, 2);
  for (auto _ : state) benchmark::DoNotOptimize(objective(*g, th));
}
BENCHMARK(BM_Objective);

static void BM_Gradient(benchmark::State& state) {
  auto g = bench_game();
  const ThetaPoint th = bench_theta(*g, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(*g, th));
}
BENCHMARK(BM_Gradient);

static void BM_PartialGradient(benchmark::State& state) {
  auto g = bench_game();
  const ThetaPoint th = bench_theta(*g, 4);
  const int n = objective_term_count(th.dims());
  std::vector<int> terms;
  for (int i = 0; i < n; i += 4) terms.push_back(i);
  for (auto _ : state) benchmark::DoNotOptimize(partial_gradient(*g, th, terms));
}
BENCHMARK(BM_PartialGradient);

static void BM_ValueIteration(benchmark::State& state) {
  auto g = bench_game();
  const PolicySequence pi = PolicySequence::uniform(g->S(), g->A(), g->T());
  const FiniteMdp m = induced_mdp(*g, propagate_flow(*g, pi));
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(m));
}
BENCHMARK(BM_ValueIteration);

static void BM_Exploitability(benchmark::State& state) {
  auto g = bench_game();
  const PolicySequence pi = PolicySequence::uniform(g->S(), g->A(), g->T());
  for (auto _ : state) benchmark::DoNotOptimize(exploitability(*g, pi));
}
BENCHMARK(BM_Exploitability);

static void BM_WarmStart(benchmark::State& state) {
  auto g = bench_game();
  const PolicySequence pi = PolicySequence::uniform(g->S(), g->A(), g->T());
  const Flow L = propagate_flow(*g, pi);
  for (auto _ : state) benchmark::DoNotOptimize(warm_start(*g, L));
}
BENCHMARK(BM_WarmStart);

static void BM_PgdIteration(benchmark::State& state) {
  auto g = bench_game();
  const ThetaBounds bounds = default_bounds(g->S(), g->A(), g->T(), g->r_max());
  const PolicySequence pi = PolicySequence::uniform(g->S(), g->A(), g->T());
  const ThetaPoint th0 = warm_start(*g, propagate_flow(*g, pi));
  SolverConfig cfg;
  cfg.max_iters = 10;
  cfg.step_size = 1e-3;
  cfg.eval_every = 1000;  // keep the loop free of exploitability evaluations
  for (auto _ : state) benchmark::DoNotOptimize(pgd(*g, th0, bounds, cfg));
}
BENCHMARK(BM_PgdIteration);

static void BM_SupportEnumeration(benchmark::State& state) {
  auto g = enumeration_game();
  for (auto _ : state) benchmark::DoNotOptimize(solve_by_enumeration(*g));
}
BENCHMARK(BM_SupportEnumeration);

BENCHMARK_MAIN();
