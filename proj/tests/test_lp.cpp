#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfomo/lp.hpp"
#include "support/oracles.hpp"

using namespace mfomo;

TEST_CASE("hand-checked equality-form programs") {
  // min -x1 - x2  s.t.  x1 + x2 + s = 1, all vars >= 0  -> optimum -1.
  {
    LpProblem p;
    p.c = Vec(3);
    p.c << -1.0, -1.0, 0.0;
    p.A = Mat(1, 3);
    p.A << 1.0, 1.0, 1.0;
    p.b = Vec::Ones(1);
    LpSolution s = simplex_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(s.residual < 1e-9);
  }

  // min x1  s.t.  x1 - x2 = 2, x1 + x2 = 4  -> unique point (3, 1).
  {
    LpProblem p;
    p.c = Vec(2);
    p.c << 1.0, 0.0;
    p.A = Mat(2, 2);
    p.A << 1.0, -1.0, 1.0, 1.0;
    p.b = Vec(2);
    p.b << 2.0, 4.0;
    LpSolution s = simplex_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x(0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(s.x(1) == doctest::Approx(1.0).epsilon(1e-10));
  }

  // x1 = -1 with x1 >= 0 is infeasible.
  {
    LpProblem p;
    p.c = Vec::Ones(1);
    p.A = Mat::Ones(1, 1);
    p.b = -Vec::Ones(1);
    CHECK(simplex_lp(p).status == LpStatus::infeasible);
  }

  // min -x1  s.t.  x1 - x2 = 0: ray (t, t) drives the objective down forever.
  {
    LpProblem p;
    p.c = Vec(2);
    p.c << -1.0, 0.0;
    p.A = Mat(1, 2);
    p.A << 1.0, -1.0;
    p.b = Vec::Zero(1);
    CHECK(simplex_lp(p).status == LpStatus::unbounded);
  }

  // Upper bounds turn the previous ray into a bounded program.
  {
    LpProblem p;
    p.c = Vec(1);
    p.c << -1.0;
    p.A = Mat::Zero(0, 1);
    p.b = Vec::Zero(0);
    p.upper = Vec(1);
    p.upper << 2.5;
    LpSolution s = simplex_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x(0) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(s.objective == doctest::Approx(-2.5).epsilon(1e-10));
  }
}

TEST_CASE("degenerate program with redundant rows") {
  // Duplicate constraints force phase 1 to drop a redundant row.
  LpProblem p;
  p.c = Vec(2);
  p.c << 1.0, 2.0;
  p.A = Mat(3, 2);
  p.A << 1.0, 1.0, 1.0, 1.0, 2.0, 2.0;
  p.b = Vec(3);
  p.b << 1.0, 1.0, 2.0;
  LpSolution s = simplex_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.residual < 1e-9);
}

TEST_CASE("random instances with a constructed optimum certificate") {
  // Build A, pick a basic feasible x*, then choose c = A^T lambda + s with
  // s >= 0 vanishing on the support of x*; x* is then provably optimal and
  // the optimal value c^T x* is known in advance.
  Rng rng(41);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 14);
    const int n = m + 2 + static_cast<int>(rng() % (2 * m + 16));
    Mat A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = uniform_pm1(rng);

    // Support of size m with strictly positive entries.
    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) perm[j] = j;
    for (int j = n - 1; j > 0; --j) std::swap(perm[j], perm[rng() % (j + 1)]);
    Vec xstar = Vec::Zero(n);
    for (int k = 0; k < m; ++k) xstar(perm[k]) = 0.2 + uniform_01(rng);
    Vec b = A * xstar;

    Vec lambda(m);
    for (int i = 0; i < m; ++i) lambda(i) = uniform_pm1(rng);
    Vec c = A.transpose() * lambda;
    for (int k = m; k < n; ++k) c(perm[k]) += 0.05 + uniform_01(rng);

    LpProblem p;
    p.c = c;
    p.A = A;
    p.b = b;
    LpSolution s = simplex_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    const double vstar = c.dot(xstar);
    const double scale = 1.0 + std::abs(vstar);
    CHECK(std::abs(s.objective - vstar) / scale < 1e-8);
    CHECK(s.residual < 1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>()));
    CHECK(s.x.minCoeff() >= -1e-12);
    ++solved;
  }
  CHECK(solved == 200);
}
