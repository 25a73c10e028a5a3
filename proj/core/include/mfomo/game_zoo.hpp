#pragma once

// Concrete game families used throughout the tests and experiments.

#include "mfomo/game.hpp"

namespace mfomo {

// Congregation game on n interchangeable sites.  States and actions are both
// sites; choosing action j steers the agent towards site j.  Staying at one's
// chosen site pays r_i, discounted by half the squared distance between the
// current flow slice and the point mass at (i, i); transition noise grows
// with that same distance, scaled by C[t].
struct CongregationParams {
  Vec r;     // length n, per-site payoff (positive)
  Vec C;     // length T; C(t) scales transition noise at step t (t >= 1;
             // step 0 moves deterministically to the chosen site)
  int T = 0;
  Vec mu0;   // optional; empty means uniform
};
std::unique_ptr<GameModel> congregation_game(const CongregationParams& p);

// The known equilibrium at a payoff-maximizing site j_star: always play
// j_star; flow is mu0 x {j_star} at t = 0 and the point mass at
// (j_star, j_star) afterwards.  Warns on stderr when j_star is not an argmax
// (the construction is only an equilibrium at argmax sites).
struct NashCandidate {
  PolicySequence pi;
  Flow L;
  int j_star = 0;
};
NashCandidate congregation_nash(const CongregationParams& p, int j_star);

// Two-state epidemic game: states {susceptible, infected}, actions
// {go out, distance}.  Going out while susceptible risks infection in
// proportion to the infected mass; distancing costs a fee; being infected
// costs more.  Rewards are the negated costs.
struct SisParams {
  double infection_rate = 0.8;
  double recovery_rate = 0.3;
  double distancing_cost = 0.5;
  double infection_cost = 2.0;
  int T = 50;
  Vec mu0;  // optional; empty means (0.9, 0.1)
};
std::unique_ptr<GameModel> sis_game(const SisParams& p);

// Smooth random game with analytic Jacobians: rewards are quadratic
// polynomials in the flow slice, transitions are softmax of affine logits.
// lipschitz_knob scales every flow-dependent coefficient; 0 makes the game
// mean-field independent.  Fully determined by the seed.
struct RandomGameParams {
  int S = 3, A = 2, T = 3;
  std::uint64_t seed = 0;
  double lipschitz_knob = 1.0;
};
std::unique_ptr<GameModel> random_game(const RandomGameParams& p);

// Factory behind {"type":"builtin","name":...,"params":{...}} documents.
std::unique_ptr<GameModel> builtin_game_from_json(const std::string& name,
                                                  const std::string& params_json);

}  // namespace mfomo
