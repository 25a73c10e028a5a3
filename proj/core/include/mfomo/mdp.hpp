#pragma once

// Finite-horizon tabular MDPs and their dynamic-programming primitives.
//
// Time runs t = 0..T.  Transitions P[t] exist for t = 0..T-1; reward tables
// r[t] (S x A) exist for all t.  Values V_t are computed backwards from
// V_T(s) = max_a r_T(s, a) with
//   Q_t(s,a) = r_t(s,a) + sum_s2 P_t(s2|s,a) V_{t+1}(s2),  V_t(s) = max_a Q_t(s,a).

#include "mfomo/common.hpp"

namespace mfomo {

struct FiniteMdp {
  int S = 0, A = 0, T = 0;
  Vec mu0;                         // initial state distribution, sums to 1
  std::vector<TransitionKernel> P; // size T
  std::vector<Mat> r;              // size T+1, r[t](s, a)

  double r_max() const;            // max |r_t(s,a)| over the tables
  void validate(double tol = 1e-12) const;  // throws std::invalid_argument
};

struct PolicySequence {
  std::vector<Mat> pi;  // T+1 matrices S x A, each row a distribution

  int T() const { return static_cast<int>(pi.size()) - 1; }
  void validate(double tol = 1e-12) const;
  static PolicySequence uniform(int S, int A, int T);
};

// Occupation measures share the Flow layout; each time slice sums to 1.
using OccupationMeasure = Flow;
void validate_occupation(const OccupationMeasure& d, double tol = 1e-10);

// Per-time-step state values; |V_t(s)| <= (T - t + 1) * r_max always holds.
using ValueTable = std::vector<Vec>;
bool value_bounds_hold(const ValueTable& V, double r_max, double slack = 1e-9);

struct OptimalValues {
  ValueTable V;            // size T+1
  std::vector<Mat> Q;      // size T+1
  PolicySequence greedy;   // deterministic, ties to the lowest action index
};
OptimalValues value_iteration(const FiniteMdp& m);

struct PolicyValues {
  ValueTable V;
  std::vector<Mat> Q;
};
PolicyValues policy_evaluation(const FiniteMdp& m, const PolicySequence& pi);

// mu0-weighted scalar value of a value table at t = 0.
double initial_value(const FiniteMdp& m, const ValueTable& V);

OccupationMeasure propagate_occupation(const FiniteMdp& m, const PolicySequence& pi);

// Conditional policy of an occupation measure.  Rows with (near-)zero state
// marginal are unconstrained; they fall back to tie_policy when given,
// otherwise to the uniform policy.
PolicySequence policy_from_occupation(const OccupationMeasure& d,
                                      const PolicySequence* tie_policy = nullptr);

// Solves max_d sum_t <r_t, d_t> over the flow polytope
//   { d >= 0,  sum_a d_0(s,a) = mu0(s),
//     sum_a d_{t+1}(s2,a) = sum_{s,a} d_t(s,a) P_t(s2|s,a) }
// with the internal simplex solver.  Matches the optimal value from
// value_iteration.  Guarded to S*A*(T+1) <= 200 variables.
struct LpOracleResult {
  double value = 0.0;
  OccupationMeasure d;
};
LpOracleResult lp_oracle(const FiniteMdp& m);

}  // namespace mfomo
