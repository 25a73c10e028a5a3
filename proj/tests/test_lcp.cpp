#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfomo/game_zoo.hpp"
#include "mfomo/lcp.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mfomo;

TEST_CASE("assembly rejects games outside the linear class") {
  CongregationParams cp;
  cp.r = Vec::Ones(2);
  cp.C = Vec::Constant(1, 0.5);
  cp.T = 1;
  CHECK_THROWS(assemble_lcp(*congregation_game(cp)));  // flow-coupled dynamics

  SisParams sp;
  sp.T = 2;
  CHECK_THROWS(assemble_lcp(*sis_game(sp)));  // linear rewards, coupled dynamics
}

TEST_CASE("assembled system matches the generic construction") {
  Rng rng(51);
  FiniteMdp m = mfomo::testing::random_mdp(2, 2, 1, rng);
  TabularGame g(m);
  LcpSystem sys = assemble_lcp(g);

  Flow uniform(2, Mat::Constant(2, 2, 0.25));
  LinearSystem lin = build_system(g, uniform);
  CHECK((sys.Abar - lin.dense()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sys.b - lin.b).lpNorm<Eigen::Infinity>() == 0.0);
  // Flow-independent rewards: the linear part vanishes and cbar matches c_L.
  CHECK(sys.Cbar.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sys.cbar - lin.c).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("enumeration on a plain one-step model finds the optimal flow") {
  // T = 0: the equilibrium is the greedy policy of the frozen reward table.
  FiniteMdp m;
  m.S = 2;
  m.A = 2;
  m.T = 0;
  m.mu0 = Vec(2);
  m.mu0 << 0.4, 0.6;
  Mat r(2, 2);
  r << 1.0, 0.2,   // state 0 prefers action 0
       0.1, 0.8;   // state 1 prefers action 1
  m.r = {r};
  TabularGame g(m);

  EnumerationResult res = solve_by_enumeration(g);
  REQUIRE(res.solutions.size() == 1);
  const ThetaPoint& th = res.solutions[0].theta;
  CHECK(th.L[0](0, 0) == doctest::Approx(0.4));
  CHECK(th.L[0](1, 1) == doctest::Approx(0.6));
  CHECK(res.solutions[0].report.is_nash);
  CHECK(objective(g, th).total < 1e-12);
  CHECK(res.supports_examined + res.pruned == 16);
  CHECK(res.pruned == 1);  // only the empty support dies early
}

TEST_CASE("enumeration recovers all three equilibria of the herding game") {
  auto g = mfomo::testing::three_ne_linear_game();
  EnumerationOptions opts;
  EnumerationResult res = solve_by_enumeration(*g, opts);

  CHECK(res.supports_examined + res.pruned == 256);
  REQUIRE(res.solutions.size() == 3);

  std::vector<double> expected{0.0, 0.5, 1.0};
  std::vector<bool> seen(3, false);
  for (const LcpSolution& sol : res.solutions) {
    CHECK(sol.report.is_nash);
    CHECK(objective(*g, sol.theta).total < 1e-12);
    const double p = sol.theta.L[0](0, 0);
    bool matched = false;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      Flow ref = mfomo::testing::three_ne_flow(expected[i]);
      double dist = 0.0;
      for (int t = 0; t <= 1; ++t)
        dist = std::max(dist, (sol.theta.L[t] - ref[t]).lpNorm<Eigen::Infinity>());
      if (dist < 1e-8) {
        CHECK(!seen[i]);  // each equilibrium appears exactly once
        seen[i] = true;
        matched = true;
      }
    }
    INFO("unmatched solution with p = ", p);
    CHECK(matched);
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("instance size guard") {
  RandomGameParams p;
  p.S = 3;
  p.A = 2;
  p.T = 3;  // 24 flow coordinates
  p.lipschitz_knob = 0.0;
  auto g = random_game(p);
  CHECK_THROWS(solve_by_enumeration(*g));
}
