#pragma once

// Hand-built games with fully known equilibrium structure, shared between
// the unit tests and the acceptance checks.

#include <memory>

#include "mfomo/game.hpp"

namespace mfomo::testing {

// Two states, two actions, horizon 1, everyone starting in state 0.  Action a
// moves deterministically to state a; the only reward is at the final step,
// where action 0 pays the current mass of one's own state and action 1 pays
// nothing.  With p the population mass choosing action 0 at step 0, states
// carry mass (p, 1 - p) at the final step, and a best response prefers the
// fuller state: the game has exactly three isolated equilibria,
// p in {0, 1/2, 1} (two "all herd one way" and one balanced split).
inline std::unique_ptr<GameModel> three_ne_linear_game() {
  const int S = 2, A = 2;
  FiniteMdp dyn;
  dyn.S = S;
  dyn.A = A;
  dyn.T = 1;
  dyn.mu0 = Vec::Zero(S);
  dyn.mu0(0) = 1.0;
  TransitionKernel kernel(A, Mat::Zero(S, S));
  for (int a = 0; a < A; ++a) kernel[a].col(a).setOnes();
  dyn.P = {kernel};
  dyn.r = {Mat::Zero(S, A), Mat::Zero(S, A)};  // rbar tables

  std::vector<Mat> rbar = dyn.r;
  std::vector<Mat> Rbar(2, Mat::Zero(S * A, S * A));
  for (int s = 0; s < S; ++s)
    for (int a2 = 0; a2 < A; ++a2)
      Rbar[1](s /*flat(s, 0)*/, s + a2 * S) = 1.0;  // own-state mass, action 0 row
  return std::make_unique<LinearRewardGame>(std::move(dyn), std::move(rbar),
                                            std::move(Rbar), /*r_max=*/1.0);
}

// One state, two arms, one shot: arm 0 pays 1, arm 1 pays 0, independent of
// the flow.  Arm 0 dominates everywhere.
inline std::unique_ptr<GameModel> dominant_bandit() {
  FiniteMdp m;
  m.S = 1;
  m.A = 2;
  m.T = 0;
  m.mu0 = Vec::Ones(1);
  Mat r(1, 2);
  r << 1.0, 0.0;
  m.r = {r};
  return std::make_unique<TabularGame>(std::move(m));
}

// One state, two arms, one shot, crowd-averse: arm a pays minus the mass
// already on arm a.  The unique equilibrium splits the population evenly.
inline std::unique_ptr<GameModel> congestion_bandit() {
  FiniteMdp dyn;
  dyn.S = 1;
  dyn.A = 2;
  dyn.T = 0;
  dyn.mu0 = Vec::Ones(1);
  dyn.r = {Mat::Zero(1, 2)};
  std::vector<Mat> rbar = dyn.r;
  std::vector<Mat> Rbar{-Mat::Identity(2, 2)};
  return std::make_unique<LinearRewardGame>(std::move(dyn), std::move(rbar),
                                            std::move(Rbar), /*r_max=*/1.0);
}

// The three equilibrium flows of three_ne_linear_game(), as stacked
// [L_0; L_1] matrices indexed by the step-0 mass p on action 0.
inline Flow three_ne_flow(double p) {
  Mat L0 = Mat::Zero(2, 2), L1 = Mat::Zero(2, 2);
  L0(0, 0) = p;
  L0(0, 1) = 1.0 - p;
  L1(0, 0) = p;        // state 0 holds mass p, best response plays action 0
  L1(1, 0) = 1.0 - p;  // state 1 holds the rest
  return Flow{L0, L1};
}

}  // namespace mfomo::testing
