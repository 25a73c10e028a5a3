#pragma once

// Exact equilibrium enumeration for the linear specialization.
//
// When dynamics ignore the flow and rewards are affine in it, the
// equilibrium conditions become a linear complementarity system in
// (y, z, vec(L)):
//
//   Abar vec(L) = b,          vec(L) >= 0,
//   Abar' y + z = cbar + Cbar vec(L),   z >= 0,
//   z' vec(L) = 0.
//
// Every NE flow solves it and vice versa.  Small instances are solved
// exactly by support enumeration: guess the set P of flow coordinates
// allowed to be positive (z vanishes on P, L vanishes off P), and test the
// remaining linear system for feasibility with the internal simplex solver.
// Cost: one small LP per subset, 2^(S*A*(T+1)) subsets total, so this is
// gated to tiny instances by design.

#include "mfomo/game.hpp"
#include "mfomo/mfomo.hpp"

namespace mfomo {

struct LcpSystem {
  Dims dims;
  Mat Abar;  // S(T+1) x SA(T+1), flow independent
  Vec b;     // [0, ..., 0, mu0]
  Vec cbar;  // block t = -vec(rbar_t)
  Mat Cbar;  // block diagonal of -Rbar_t; c_L = cbar + Cbar vec(L)
};

// Requires mean_field_independent_dynamics() and linear_rewards(); throws
// std::invalid_argument otherwise.
LcpSystem assemble_lcp(const GameModel& g);

struct EnumerationOptions {
  int max_dim = 20;            // refuse S*A*(T+1) beyond this
  double residual_tol = 1e-9;  // linear-system residual per candidate
  double dedupe_tol = 1e-8;    // L-infinity collapse radius between solutions
  double nash_tol = 1e-8;      // final verification gate
};

struct LcpSolution {
  ThetaPoint theta;          // bounded point with objective ~ 0 at the NE flow
  PolicySequence pi;
  NashReport report;
  std::vector<int> support;  // flow coordinates allowed positive
};

struct EnumerationResult {
  std::vector<LcpSolution> solutions;
  std::int64_t supports_examined = 0;  // feasibility programs solved
  std::int64_t pruned = 0;             // subsets skipped without a solve
};

// Walks all supports in lexicographic bitmask order.  Subsets that zero out
// an entire time slice of the flow are pruned up front (the constraint rows
// force unit mass per slice).  Feasible candidates are re-verified as
// equilibria and deduplicated by their flow.
EnumerationResult solve_by_enumeration(const GameModel& g,
                                       const EnumerationOptions& opts = {});

}  // namespace mfomo
