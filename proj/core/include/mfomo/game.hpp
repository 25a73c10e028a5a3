#pragma once

// Mean-field games over finite state/action spaces with horizon T.
//
// A GameModel supplies per-time-step transition kernels and reward tables as
// functions of the current flow slice L_t (an S x A distribution over
// state-action pairs).  Freezing a full flow L = (L_0..L_T) yields an
// ordinary finite MDP; the induced best-response machinery, the flow operator
// Gamma(pi) and exploitability all live here.

#include "mfomo/common.hpp"
#include "mfomo/mdp.hpp"

#include <memory>
#include <optional>

namespace mfomo {

class GameModel {
 public:
  virtual ~GameModel() = default;

  virtual int S() const = 0;
  virtual int A() const = 0;
  virtual int T() const = 0;
  virtual const Vec& mu0() const = 0;
  virtual double r_max() const = 0;

  // t in [0, T).  L_t may carry entries a hair outside [0, 1] (callers clamp
  // to the 1e-9 tolerance); implementations must stay finite on a
  // neighborhood of the simplex.
  virtual TransitionKernel transition(int t, const Mat& L_t) const = 0;

  // t in [0, T].
  virtual Mat reward(int t, const Mat& L_t) const = 0;

  // d reward(s,a) / d L_t(s2,a2), both sides flattened column-major:
  // (S*A) x (S*A).  Default: central finite differences.
  virtual Mat reward_jacobian(int t, const Mat& L_t) const;

  // For each flow coordinate k: d W_t / d L_t[k], each S x (S*A) in the
  // stacked layout W(s2, s + a*S) = P_t(s2 | s, a).  Default: central finite
  // differences.
  virtual std::vector<Mat> transition_jacobian(int t, const Mat& L_t) const;

  virtual bool mean_field_independent_dynamics() const { return false; }

  // True when r_t(s,a,L) = rbar_t(s,a) + <row (s,a) of Rbar_t, vec(L_t)>.
  virtual bool linear_rewards() const { return false; }
  // Fills the payload above; rbar: T+1 tables S x A, Rbar: T+1 matrices
  // (S*A) x (S*A).  Throws when linear_rewards() is false.
  virtual void linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const;

  // Optional Lipschitz metadata: bounds on how strongly one flow slice moves
  // transitions (in the max-row-l1 sense) and rewards (in the max-entry
  // sense) per unit l1 change of the slice.
  virtual std::optional<double> transition_lipschitz() const { return std::nullopt; }
  virtual std::optional<double> reward_lipschitz() const { return std::nullopt; }

  // JSON document describing this game, when representable.
  virtual std::string to_json() const;
};

// Step size used by the finite-difference Jacobian fallbacks.
double fd_step(const Mat& L_t);

// Clamps a flow slice into [0, 1] elementwise before a game evaluation.
// Identity for interior points, so analytic and finite-difference gradients
// agree away from the boundary.
Mat clamp_slice(const Mat& L_t);

// Freezes the flow: M(L) with P_t(.|s,a) = transition(t, L_t),
// r_t = reward(t, L_t).
FiniteMdp induced_mdp(const GameModel& g, const Flow& L);

// Gamma(pi): the flow a population playing pi generates, with transitions
// evaluated at the evolving flow itself:
//   Gamma_0(s,a)    = mu0(s) pi_0(a|s)
//   Gamma_{t+1}(s,a) = pi_{t+1}(a|s) sum_{s2,a2} Gamma_t(s2,a2) P_t(s|s2,a2,Gamma_t).
Flow propagate_flow(const GameModel& g, const PolicySequence& pi);

// Expl(pi) = V*(Gamma(pi)) - V^pi(Gamma(pi)), both mu0-weighted values in the
// MDP induced at the policy's own flow.  Tiny negatives (>= -1e-10, pure
// floating-point noise) are clamped to zero.
double exploitability(const GameModel& g, const PolicySequence& pi);

struct NashReport {
  double consistency_residual = 0.0;  // sum_t || Gamma(pi)_t - L_t ||_1
  double optimality_gap = 0.0;        // Expl(pi)
  bool is_nash = false;               // both below tol
};
NashReport verify_nash(const GameModel& g, const PolicySequence& pi, const Flow& L,
                       double tol);

// max over (s, a, t) of the row-l1 norm of the transition difference tensors.
double flow_inf1_norm(const std::vector<TransitionKernel>& p_diff);
// sum over t of the max-abs entry of the per-t tables.
double flow_1inf_norm(const std::vector<Mat>& x_diff);

// sum_t < r_t(L1_t) - r_t(L2_t), L1_t - L2_t >.  Nonpositive for weakly
// monotone games; a positive value certifies non-monotonicity.
double weak_monotonicity_witness(const GameModel& g, const Flow& L1, const Flow& L2);

// Sampled Lipschitz estimates (C_P, C_r): max observed difference quotient
// over random flow pairs, inflated by 1.5.  Deterministic per seed.
std::pair<double, double> estimate_lipschitz_constants(const GameModel& g, int samples,
                                                       std::uint64_t seed);

// Mean-field-independent game given by explicit tensors.
class TabularGame : public GameModel {
 public:
  explicit TabularGame(FiniteMdp mdp);
  int S() const override { return mdp_.S; }
  int A() const override { return mdp_.A; }
  int T() const override { return mdp_.T; }
  const Vec& mu0() const override { return mdp_.mu0; }
  double r_max() const override { return r_max_; }
  TransitionKernel transition(int t, const Mat&) const override { return mdp_.P[t]; }
  Mat reward(int t, const Mat&) const override { return mdp_.r[t]; }
  Mat reward_jacobian(int t, const Mat&) const override;
  std::vector<Mat> transition_jacobian(int t, const Mat&) const override;
  bool mean_field_independent_dynamics() const override { return true; }
  bool linear_rewards() const override { return true; }
  void linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const override;
  std::string to_json() const override;
  const FiniteMdp& mdp() const { return mdp_; }

 private:
  FiniteMdp mdp_;
  double r_max_;
};

// Mean-field-independent dynamics with rewards affine in the own-time flow
// slice.  rbar: T+1 tables S x A; Rbar: T+1 matrices (S*A) x (S*A) whose row
// flat(s,a) holds the linear coefficients.
class LinearRewardGame : public GameModel {
 public:
  LinearRewardGame(FiniteMdp dynamics, std::vector<Mat> rbar, std::vector<Mat> Rbar,
                   double r_max);
  int S() const override { return mdp_.S; }
  int A() const override { return mdp_.A; }
  int T() const override { return mdp_.T; }
  const Vec& mu0() const override { return mdp_.mu0; }
  double r_max() const override { return r_max_; }
  TransitionKernel transition(int t, const Mat&) const override { return mdp_.P[t]; }
  Mat reward(int t, const Mat& L_t) const override;
  Mat reward_jacobian(int t, const Mat&) const override { return Rbar_[t]; }
  std::vector<Mat> transition_jacobian(int t, const Mat&) const override;
  bool mean_field_independent_dynamics() const override { return true; }
  bool linear_rewards() const override { return true; }
  void linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const override;
  std::string to_json() const override;

 private:
  FiniteMdp mdp_;  // rewards inside are the rbar tables
  std::vector<Mat> Rbar_;
  double r_max_;
};

// Deserialization.  Accepts {"type":"tabular"...}, {"type":"tabular_linear"...}
// and {"type":"builtin","name":...,"params":{...}} documents; `renormalize`
// rescales slightly-off rows/mu0 instead of rejecting them.
std::unique_ptr<GameModel> game_from_json_text(const std::string& text,
                                               bool renormalize = false);
std::unique_ptr<GameModel> game_from_json_file(const std::string& path,
                                               bool renormalize = false);

}  // namespace mfomo
