#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfomo/baselines.hpp"
#include "support/fixtures.hpp"

using namespace mfomo;

namespace {

PolicySequence policy_1x2(double p0) {
  PolicySequence pi = PolicySequence::uniform(1, 2, 0);
  pi.pi[0] << p0, 1.0 - p0;
  return pi;
}

void check_trace_shape(const std::vector<IterationRecord>& trace) {
  REQUIRE(!trace.empty());
  int prev_iter = -1;
  double prev_time = -1.0;
  for (const auto& rec : trace) {
    CHECK(rec.iter > prev_iter);
    CHECK(rec.time_s >= prev_time);
    CHECK(rec.time_s >= 0.0);
    // No iterate in theta space: every objective-side column stays NaN.
    CHECK(std::isnan(rec.f_total));
    CHECK(std::isnan(rec.f_consistency));
    CHECK(std::isnan(rec.f_bellman));
    CHECK(std::isnan(rec.f_complementarity));
    CHECK(std::isnan(rec.grad_map_norm));
    CHECK(rec.expl >= -1e-12);
    prev_iter = rec.iter;
    prev_time = rec.time_s;
  }
}

void check_row_stochastic(const PolicySequence& pi) {
  for (const auto& m : pi.pi)
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
      CHECK(m.row(s).minCoeff() >= -1e-15);
      CHECK(m.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

}  // namespace

TEST_CASE("fictitious play settles the dominant bandit after one replacement") {
  auto g = testing::dominant_bandit();
  BaselineConfig cfg;
  cfg.max_iters = 5;
  cfg.eval_every = 1;

  int cb_calls = 0;
  TraceCallback cb = [&](const IterationRecord&) { ++cb_calls; };
  const BaselineResult res = fictitious_play(*g, PolicySequence::uniform(1, 2, 0), cfg, cb);

  check_trace_shape(res.trace);
  REQUIRE(res.trace.size() == 6);  // iterations 0..4 plus the final state
  CHECK(cb_calls == static_cast<int>(res.trace.size()));
  CHECK(res.trace[0].expl == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(res.trace[0].expl_normalized == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(res.zero_initial_expl);
  // The first update carries weight 1, so the average IS the best response
  // from iteration 1 on and the exploitability is exactly zero.
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].expl <= 1e-12);
  CHECK(res.pi.pi[0](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  check_row_stochastic(res.pi);
}

TEST_CASE("fictitious play decays like 1/k on the congestion bandit") {
  auto g = testing::congestion_bandit();
  BaselineConfig cfg;
  cfg.max_iters = 400;
  cfg.eval_every = 1;

  const BaselineResult res = fictitious_play(*g, policy_1x2(0.9), cfg);
  check_trace_shape(res.trace);
  CHECK_FALSE(res.zero_initial_expl);

  // Start (0.9, 0.1): expl = 2 d^2 + |d| with d = 0.4.
  CHECK(res.trace[0].expl == doctest::Approx(0.72).epsilon(1e-12));
  for (const auto& rec : res.trace) {
    if (rec.iter == 0) continue;
    CHECK(rec.expl <= 1.0 / rec.iter + 1e-12);
    CHECK(rec.expl_normalized == doctest::Approx(rec.expl / 0.72).epsilon(1e-9));
  }
  CHECK(res.trace.back().expl <= 1e-12);
  check_row_stochastic(res.pi);
}

TEST_CASE("fictitious play flags a start that is already at equilibrium") {
  auto g = testing::congestion_bandit();
  BaselineConfig cfg;
  cfg.max_iters = 10;
  const BaselineResult res = fictitious_play(*g, PolicySequence::uniform(1, 2, 0), cfg);
  CHECK(res.zero_initial_expl);
  CHECK(res.trace[0].expl <= 1e-15);
  for (const auto& rec : res.trace) CHECK(std::isnan(rec.expl_normalized));
}

TEST_CASE("mirror descent concentrates monotonically on the dominant arm") {
  auto g = testing::dominant_bandit();
  BaselineConfig cfg;
  cfg.method = BaselineMethod::online_mirror_descent;
  cfg.learning_rate = 1.0;
  cfg.max_iters = 12;
  cfg.eval_every = 1;

  const BaselineResult res = run_baseline(*g, PolicySequence::uniform(1, 2, 0), cfg);
  check_trace_shape(res.trace);
  CHECK(res.trace[0].expl == doctest::Approx(0.5).epsilon(1e-12));
  // expl = 1 - pi(arm 0) = 1 - sigmoid(k): strictly decreasing in k.
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].expl < res.trace[i - 1].expl);
  CHECK(res.trace.back().expl <= 1e-4);
  CHECK(res.pi.pi[0](0, 0) > 0.999);
  check_row_stochastic(res.pi);
}

TEST_CASE("mirror descent with a vanishing learning rate stays at the start") {
  auto g = testing::congestion_bandit();
  BaselineConfig cfg;
  cfg.learning_rate = 1e-12;
  cfg.max_iters = 10;
  const PolicySequence pi0 = policy_1x2(0.3);
  const BaselineResult res = online_mirror_descent(*g, pi0, cfg);
  CHECK((res.pi.pi[0] - pi0.pi[0]).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("baseline configs are validated") {
  auto g = testing::dominant_bandit();
  const PolicySequence pi0 = PolicySequence::uniform(1, 2, 0);
  BaselineConfig cfg;

  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(online_mirror_descent(*g, pi0, cfg), std::invalid_argument);
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(online_mirror_descent(*g, pi0, cfg), std::invalid_argument);

  cfg = BaselineConfig{};
  cfg.damping = 0.0;
  CHECK_THROWS_AS(damped_fixed_point(*g, pi0, cfg), std::invalid_argument);
  cfg.damping = 1.5;
  CHECK_THROWS_AS(damped_fixed_point(*g, pi0, cfg), std::invalid_argument);
}

TEST_CASE("undamped fixed point jumps straight to the best response") {
  auto g = testing::dominant_bandit();
  BaselineConfig cfg;
  cfg.method = BaselineMethod::damped_fixed_point;
  cfg.damping = 1.0;
  cfg.max_iters = 3;
  cfg.eval_every = 1;

  const BaselineResult res = run_baseline(*g, PolicySequence::uniform(1, 2, 0), cfg);
  check_trace_shape(res.trace);
  CHECK(res.trace[0].expl == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].expl <= 1e-12);
  CHECK(res.pi.pi[0](0, 0) == 1.0);
}

TEST_CASE("half damping halves the gap each iteration") {
  auto g = testing::dominant_bandit();
  BaselineConfig cfg;
  cfg.damping = 0.5;
  cfg.max_iters = 20;
  cfg.eval_every = 1;

  const BaselineResult res = damped_fixed_point(*g, PolicySequence::uniform(1, 2, 0), cfg);
  // pi_k(arm 0) = 1 - 2^{-(k+1)}, so expl_k = 2^{-(k+1)} exactly.
  for (const auto& rec : res.trace)
    CHECK(rec.expl == doctest::Approx(std::pow(0.5, rec.iter + 1)).epsilon(1e-12));
  check_row_stochastic(res.pi);
}

TEST_CASE("trace cadence honours eval_every and always appends the final state") {
  auto g = testing::congestion_bandit();
  BaselineConfig cfg;
  cfg.max_iters = 10;
  cfg.eval_every = 3;
  const BaselineResult res = fictitious_play(*g, policy_1x2(0.8), cfg);
  REQUIRE(res.trace.size() == 5);
  const int expected[] = {0, 3, 6, 9, 10};
  for (int i = 0; i < 5; ++i) CHECK(res.trace[i].iter == expected[i]);
}

TEST_CASE("dispatch matches the direct entry points") {
  auto g = testing::congestion_bandit();
  const PolicySequence pi0 = policy_1x2(0.7);
  BaselineConfig cfg;
  cfg.max_iters = 25;
  cfg.eval_every = 5;

  for (const auto method : {BaselineMethod::fictitious_play,
                            BaselineMethod::online_mirror_descent,
                            BaselineMethod::damped_fixed_point}) {
    cfg.method = method;
    const BaselineResult via_dispatch = run_baseline(*g, pi0, cfg);
    const BaselineResult direct =
        method == BaselineMethod::fictitious_play ? fictitious_play(*g, pi0, cfg)
        : method == BaselineMethod::online_mirror_descent
            ? online_mirror_descent(*g, pi0, cfg)
            : damped_fixed_point(*g, pi0, cfg);
    REQUIRE(via_dispatch.trace.size() == direct.trace.size());
    for (std::size_t i = 0; i < direct.trace.size(); ++i)
      CHECK(via_dispatch.trace[i].expl == direct.trace[i].expl);
    for (std::size_t t = 0; t < direct.pi.pi.size(); ++t)
      CHECK((via_dispatch.pi.pi[t] - direct.pi.pi[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}
