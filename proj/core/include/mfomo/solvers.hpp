#pragma once

// First-order solvers for the residual objective over the feasible box.
//
// All solvers share one driver skeleton: evaluate the (full or stochastic)
// gradient, take a step, project back onto the box, and append trace records
// on a fixed cadence.  Progress is measured three ways: the objective value,
// the projected-gradient-mapping norm ||theta - proj(theta - eta g)|| / eta,
// and the exploitability of the policy read off the current flow block.

#include <functional>

#include "mfomo/mfomo.hpp"
#include "mfomo/projections.hpp"

namespace mfomo {

enum class StepRule {
  constant,    // eta_k = eta
  decreasing,  // eta_k = eta / (sqrt(k + 3) * log2(k + 3))
  armijo,      // backtracking halving from eta per iteration
};

enum class AdamVariant { adam, nadam };

struct SolverConfig {
  int max_iters = 1000;
  double step_size = 0.0;          // 0: 1 / estimated smoothness (pgd/spgd), 0.01 (adam)
  StepRule step_rule = StepRule::constant;
  double objective_tol = 0.0;      // stop when f <= tol (0 disables)
  double stationarity_tol = 0.0;   // stop when the gradient-map norm <= tol
  double wall_clock_budget_s = 0.0;  // 0 disables
  int eval_every = 10;             // trace/exploitability cadence (1 = every iter)
  std::uint64_t seed = 0;          // stochastic batches + smoothness probing
  int batch_size = 0;              // spgd only; 0 or >= term count = full batch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  AdamVariant variant = AdamVariant::adam;
};

struct IterationRecord {
  int iter = 0;
  double time_s = 0.0;
  double f_total = 0.0;
  double f_consistency = 0.0;
  double f_bellman = 0.0;
  double f_complementarity = 0.0;
  double grad_map_norm = 0.0;
  double expl = 0.0;
  double expl_normalized = 0.0;  // expl / expl(initial policy); NaN when undefined
  double step_size = 0.0;
};

enum class StopReason { max_iters, objective_tol, stationarity_tol, wall_clock, diverged };

struct SolveResult {
  ThetaPoint theta;
  std::vector<IterationRecord> trace;
  StopReason stop = StopReason::max_iters;
  bool zero_initial_expl = false;  // initial policy already optimal; normalization undefined
};

using TraceCallback = std::function<void(const IterationRecord&)>;

// Projected gradient descent with full gradients.
SolveResult pgd(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                const SolverConfig& cfg, const TraceCallback& cb = {});

// Stochastic variant: per iteration sample cfg.batch_size objective terms
// uniformly without replacement and scale their gradient sum by n / |B|
// (an unbiased full-gradient estimate).  A full batch short-circuits to the
// exact gradient and reproduces pgd bit for bit.
SolveResult spgd(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                 const SolverConfig& cfg, const TraceCallback& cb = {});

// Projected Adam / NAdam on the flat theta vector.
SolveResult adam_solve(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                       const SolverConfig& cfg, const TraceCallback& cb = {});

// Runs Adam/NAdam in an unconstrained parametrization whose image is the
// feasible box: per-slice softmax for L, a normalized exponential family with
// one slack coordinate for the capped z block, and a scaled sine for y.
// Feasibility holds by construction at every iterate.
SolveResult reparametrized_solve(const GameModel& g, const ThetaPoint& th0,
                                 const ThetaBounds& bounds, const SolverConfig& cfg,
                                 const TraceCallback& cb = {});

// Unconstrained coordinates behind reparametrized_solve.
struct ReparamPoint {
  Flow u;      // T+1 logit tables, slice-wise softmax -> L
  Vec v;       // z = budget * exp(v) / (sum exp(v) + exp(w0))
  double w0 = 0.0;
  Vec w;       // y_i = (radius / sqrt(dim)) * sin(w_i)
};
ReparamPoint reparam_from_theta(const ThetaPoint& th, const ThetaBounds& bounds);
ThetaPoint reparam_to_theta(const ReparamPoint& p, const ThetaBounds& bounds);

// ||theta - proj(theta - eta * grad)|| / eta: zero exactly at constrained
// stationary points.
double gradient_map_norm(const ThetaPoint& th, const Gradient& grad,
                         const ThetaBounds& bounds, double eta);

// Uniform-ish sample from the feasible box (Dirichlet slices, scaled
// exponential z under the budget, y uniform in the ball).
ThetaPoint sample_feasible(const Dims& d, const ThetaBounds& bounds, Rng& rng);

// Sampled estimate of the gradient's Lipschitz constant over the box:
// max difference quotient ||grad(a) - grad(b)|| / ||a - b|| over random
// global pairs, local perturbation pairs, and a bisection refinement around
// the worst pair, inflated by 1.5.
double estimate_smoothness(const GameModel& g, const ThetaBounds& bounds,
                           int samples = 40, std::uint64_t seed = 123);

}  // namespace mfomo
