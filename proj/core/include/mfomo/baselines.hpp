#pragma once

// Reference iterative schemes to compare the optimizers against.  These are
// standard textbook reconstructions kept deliberately simple; they share the
// optimizer trace schema (objective columns are NaN — there is no theta).
//
//   fictitious_play:        average the flows of successive best responses.
//   online_mirror_descent:  accumulate Q-values, play their softmax.
//   damped_fixed_point:     damped best-response iteration in policy space.

#include "mfomo/game.hpp"
#include "mfomo/solvers.hpp"

namespace mfomo {

enum class BaselineMethod { fictitious_play, online_mirror_descent, damped_fixed_point };

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::fictitious_play;
  double learning_rate = 1.0;  // online_mirror_descent; must be > 0
  double damping = 1.0;        // damped_fixed_point; in (0, 1]
  int max_iters = 100;
  int eval_every = 1;
  std::uint64_t seed = 0;      // reserved; the schemes themselves are deterministic
  double wall_clock_budget_s = 0.0;  // 0 disables
};

struct BaselineResult {
  PolicySequence pi;
  std::vector<IterationRecord> trace;
  bool zero_initial_expl = false;
};

// At iteration k (1-based weighting): best-respond to the frozen model at the
// averaged flow, then move the average 1/(k+1) of the way to the responder's
// own flow.  The first step therefore replaces the average outright.  Records
// the exploitability of the policy read off the averaged flow.
BaselineResult fictitious_play(const GameModel& g, const PolicySequence& pi0,
                               const BaselineConfig& cfg, const TraceCallback& cb = {});

// Accumulates learning_rate * Q^{pi_k} (evaluated at the policy's own flow)
// into logits initialized at log pi0, and plays their row softmax.  A zero
// learning-rate limit leaves pi0 untouched.
BaselineResult online_mirror_descent(const GameModel& g, const PolicySequence& pi0,
                                     const BaselineConfig& cfg,
                                     const TraceCallback& cb = {});

// pi <- (1 - damping) pi + damping * best_response(flow(pi)).
BaselineResult damped_fixed_point(const GameModel& g, const PolicySequence& pi0,
                                  const BaselineConfig& cfg, const TraceCallback& cb = {});

// Dispatch on cfg.method.
BaselineResult run_baseline(const GameModel& g, const PolicySequence& pi0,
                            const BaselineConfig& cfg, const TraceCallback& cb = {});

}  // namespace mfomo
