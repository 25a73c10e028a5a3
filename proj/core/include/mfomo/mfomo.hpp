#pragma once

// The optimization target whose zeros are exactly the Nash equilibria.
//
// For a frozen flow L, stack the flow-polytope constraints into
//   A_L d = b,  b = [0, ..., 0, mu0],
// where block row t < T enforces conservation W_t(L_t) d_t - Z d_{t+1} = 0,
// the last block row enforces Z d_0 = mu0, Z = [I ... I] sums out actions and
// W_t(L_t) stacks the transition kernel at L_t.  With c_L the stacked
// negated rewards, the objective over theta = (y, z, L) is
//
//   f(theta) = ||A_L vec(L) - b||^2 + ||A_L' y + z - c_L||^2 + z' vec(L).
//
// f >= 0 everywhere, and f(theta) = 0 exactly at points whose L is an
// equilibrium flow (with y the shifted optimal values and z the advantage
// gaps).  Everything here works on that objective: evaluation, analytic
// gradients, the warm start that makes f equal exploitability, and the
// a-priori constant bounding exploitability by sqrt(f).

#include "mfomo/common.hpp"
#include "mfomo/game.hpp"
#include "mfomo/theta.hpp"

namespace mfomo {

// Block representation of A_L, b and c_L; never materializes the big matrix
// unless dense() is asked for.
struct LinearSystem {
  Dims dims;
  std::vector<Mat> W;  // size T, each S x (S*A)
  Vec b;               // length S*(T+1)
  Vec c;               // length S*A*(T+1), block t = -vec(r_t)

  Vec apply(const Vec& d) const;            // A_L d
  Vec apply_transpose(const Vec& y) const;  // A_L' y
  Mat dense() const;
};

LinearSystem build_system(const GameModel& g, const Flow& L);

struct ObjectiveBreakdown {
  double consistency = 0.0;      // ||A_L vec(L) - b||^2
  double bellman = 0.0;          // ||A_L' y + z - c_L||^2
  double complementarity = 0.0;  // z' vec(L)
  double total = 0.0;
};

// Expansion form: accumulates the per-row squared residuals directly from
// the block structure.
ObjectiveBreakdown objective(const GameModel& g, const ThetaPoint& th);

// Reference form via the dense matrix; agrees with `objective` to 1e-12 and
// exists to cross-check it.
ObjectiveBreakdown objective_matrix_form(const GameModel& g, const ThetaPoint& th);

struct Gradient {
  Vec y, z, L;  // same layout as the theta blocks

  Vec to_vector() const {
    Vec out(y.size() + z.size() + L.size());
    out << y, z, L;
    return out;
  }
};

// Analytic gradient; flow dependence of W_t and r_t enters through the game
// Jacobians (finite-difference fallbacks when a game has no analytic ones).
Gradient gradient(const GameModel& g, const ThetaPoint& th);

// The objective is a sum of n = S(T+1)(2A+1) scalar terms: one squared
// residual per constraint row, one squared residual per Bellman row, one
// z*L product per flow coordinate.  Canonical order: consistency rows,
// Bellman rows, complementarity products.
int objective_term_count(const Dims& d);

// Sum of the gradients of the listed terms (basis of the stochastic solver).
Gradient partial_gradient(const GameModel& g, const ThetaPoint& th,
                          const std::vector<int>& terms);

// Bounded point with zero Bellman residual built from the MDP induced at L0:
// y holds the optimal values shifted by one step (last block = -V*_0), z the
// advantage gaps V*_t - Q*_t.  When L0 = Gamma(pi), f(warm_start) = Expl(pi)
// exactly.
ThetaPoint warm_start(const GameModel& g, const Flow& L0);

// Keeps L and replaces (y, z) by the bounded warm-start pair; maps any zero
// of f to a zero inside the feasible box.
ThetaPoint solution_modification(const GameModel& g, const ThetaPoint& th);

struct ExtractResult {
  PolicySequence pi;
  Flow L;
  NashReport report;
  ObjectiveBreakdown f;
};
ExtractResult extract_solution(const GameModel& g, const ThetaPoint& th, double tol);

// Constant kappa(S, A, T, C_P, C_r, r_max) such that the exploitability of
// the policy extracted from any feasible theta is at most
// kappa * sqrt(f(theta)) + f(theta).  C_P = 0 uses the closed-form limit.
double exploitability_bound_constant(int S, int A, int T, double C_P, double C_r,
                                     double r_max);

}  // namespace mfomo
