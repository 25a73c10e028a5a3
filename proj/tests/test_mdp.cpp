#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfomo/mdp.hpp"
#include "support/oracles.hpp"

using namespace mfomo;

namespace {

// Two states, two actions, horizon 1: action 0 stays, action 1 swaps.
// Reward only at the final step, and only in state 0.
FiniteMdp stay_swap_mdp() {
  FiniteMdp m;
  m.S = 2;
  m.A = 2;
  m.T = 1;
  m.mu0 = Vec(2);
  m.mu0 << 0.5, 0.5;
  Mat stay = Mat::Identity(2, 2);
  Mat swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  m.P = {TransitionKernel{stay, swap}};
  Mat r0 = Mat::Zero(2, 2);
  Mat r1 = Mat::Zero(2, 2);
  r1.row(0).setOnes();  // terminal reward 1 for being in state 0
  m.r = {r0, r1};
  return m;
}

}  // namespace

TEST_CASE("backward recursion on the stay/swap chain") {
  FiniteMdp m = stay_swap_mdp();
  m.validate();
  OptimalValues opt = value_iteration(m);

  // Terminal values: V_1 = max_a r_1(s, a) = (1, 0).
  CHECK(opt.V[1](0) == doctest::Approx(1.0));
  CHECK(opt.V[1](1) == doctest::Approx(0.0));
  // From state 0 stay (action 0); from state 1 swap (action 1). Both reach 1.
  CHECK(opt.V[0](0) == doctest::Approx(1.0));
  CHECK(opt.V[0](1) == doctest::Approx(1.0));
  CHECK(opt.greedy.pi[0](0, 0) == doctest::Approx(1.0));
  CHECK(opt.greedy.pi[0](1, 1) == doctest::Approx(1.0));
  CHECK(initial_value(m, opt.V) == doctest::Approx(1.0));
}

TEST_CASE("greedy ties resolve to the lowest action index") {
  FiniteMdp m = stay_swap_mdp();
  m.r[1].setZero();  // all rewards zero: every action ties
  OptimalValues opt = value_iteration(m);
  for (int t = 0; t <= m.T; ++t)
    for (int s = 0; s < m.S; ++s) {
      CHECK(opt.greedy.pi[t](s, 0) == doctest::Approx(1.0));
      CHECK(opt.greedy.pi[t](s, 1) == doctest::Approx(0.0));
    }
}

TEST_CASE("value bounds hold on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 3);
    const int A = 1 + static_cast<int>(rng() % 3);
    const int T = static_cast<int>(rng() % 5);
    FiniteMdp m = mfomo::testing::random_mdp(S, A, T, rng);
    OptimalValues opt = value_iteration(m);
    CHECK(value_bounds_hold(opt.V, m.r_max()));
    PolicySequence uni = PolicySequence::uniform(S, A, T);
    PolicyValues pv = policy_evaluation(m, uni);
    CHECK(value_bounds_hold(pv.V, m.r_max()));
    // Optimal values dominate any policy's values.
    for (int t = 0; t <= T; ++t)
      CHECK((opt.V[t] - pv.V[t]).minCoeff() >= -1e-10);
  }
}

TEST_CASE("policy evaluation and occupation flow agree with Monte Carlo rollouts") {
  Rng rng(12);
  for (int trial = 0; trial < 4; ++trial) {
    const int S = 3, A = 2, T = 3;
    FiniteMdp m = mfomo::testing::random_mdp(S, A, T, rng);
    // Random stochastic policy.
    PolicySequence pi = PolicySequence::uniform(S, A, T);
    for (int t = 0; t <= T; ++t)
      for (int s = 0; s < S; ++s) {
        Vec w(A);
        for (int a = 0; a < A; ++a) w(a) = 0.2 + uniform_01(rng);
        pi.pi[t].row(s) = (w / w.sum()).transpose();
      }

    PolicyValues vt = policy_evaluation(m, pi);
    const double v0 = m.mu0.dot(vt.V[0]);
    Flow d = propagate_occupation(m, pi);
    validate_occupation(d);

    Rng sim_rng(1000 + trial);
    auto stats = mfomo::testing::rollout_policy(m, pi, 40000, sim_rng);
    // Mean return within five standard errors of the exact value.
    CHECK(std::abs(stats.mean_return - v0) < 5.0 * stats.std_error + 1e-12);
    // Occupancy frequencies close to the exact flow (binomial std err <= 1/(2 sqrt N)).
    const double occ_tol = 5.0 * 0.5 / std::sqrt(40000.0);
    for (int t = 0; t <= T; ++t)
      CHECK((stats.occupancy[t] - d[t]).lpNorm<Eigen::Infinity>() < occ_tol);
  }
}

TEST_CASE("policy recovery from an occupation flow") {
  Rng rng(13);
  FiniteMdp m = mfomo::testing::random_mdp(3, 2, 2, rng);
  PolicySequence pi = PolicySequence::uniform(3, 2, 2);
  pi.pi[0].row(0) << 0.7, 0.3;
  pi.pi[1].row(2) << 0.1, 0.9;
  Flow d = propagate_occupation(m, pi);
  PolicySequence back = policy_from_occupation(d);
  Flow d2 = propagate_occupation(m, back);
  // Recovered policy reproduces the same flow wherever mass is positive.
  for (int t = 0; t <= 2; ++t)
    CHECK((d[t] - d2[t]).lpNorm<Eigen::Infinity>() < 1e-12);

  // Zero-marginal states fall back to the supplied tie policy.
  Flow zero_flow(3, Mat::Zero(3, 2));
  for (auto& Lt : zero_flow) Lt(0, 0) = 1.0;  // all mass in state 0
  PolicySequence tie = PolicySequence::uniform(3, 2, 2);
  tie.pi[1].row(1) << 0.0, 1.0;
  PolicySequence rec = policy_from_occupation(zero_flow, &tie);
  CHECK(rec.pi[1](1, 1) == doctest::Approx(1.0));
}

TEST_CASE("linear-programming route matches dynamic programming") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 2);
    const int A = 2;
    const int T = 1 + static_cast<int>(rng() % 3);
    FiniteMdp m = mfomo::testing::random_mdp(S, A, T, rng);
    OptimalValues opt = value_iteration(m);
    const double dp_value = initial_value(m, opt.V);
    LpOracleResult lp = lp_oracle(m);
    CHECK(std::abs(lp.value - dp_value) < 1e-8);
    validate_occupation(lp.d);
    // The flow recovered from the LP achieves the optimal return.
    PolicySequence pi = policy_from_occupation(lp.d);
    PolicyValues pv = policy_evaluation(m, pi);
    CHECK(std::abs(m.mu0.dot(pv.V[0]) - dp_value) < 1e-8);
  }
}

TEST_CASE("validation rejects malformed models") {
  FiniteMdp m = stay_swap_mdp();
  m.mu0(0) = 0.7;  // no longer sums to one
  CHECK_THROWS(m.validate());

  FiniteMdp m2 = stay_swap_mdp();
  m2.P[0][0](0, 0) = 0.5;  // row no longer stochastic
  CHECK_THROWS(m2.validate());

  FiniteMdp m3 = stay_swap_mdp();
  m3.r.pop_back();  // wrong number of reward tables
  CHECK_THROWS(m3.validate());
}
