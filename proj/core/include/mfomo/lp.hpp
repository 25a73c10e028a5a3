#pragma once

// Dense two-phase primal simplex for small linear programs
//
//   minimize c'x   subject to   A x = b,  0 <= x (<= upper, optional).
//
// Bland's rule everywhere, so cycling cannot occur.  Intended for problems
// with at most a few hundred variables; every iteration refactorizes the
// basis, trading speed for simplicity and numerical robustness.

#include "mfomo/common.hpp"

namespace mfomo {

struct LpProblem {
  Vec c;      // objective, length n
  Mat A;      // equality constraints, m x n
  Vec b;      // right hand side, length m
  Vec upper;  // optional elementwise upper bounds (size 0 = none;
              // +infinity entries mean the variable is unbounded above)
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Vec x;
  double objective = 0.0;
  double residual = 0.0;  // ||A x - b||_inf at the returned point
  int iterations = 0;
};

LpSolution simplex_lp(const LpProblem& p, double tol = 1e-9);

}  // namespace mfomo
