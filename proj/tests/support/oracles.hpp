#pragma once

// Independent reference implementations used only by tests.  Deliberately
// naive: enumerate, simulate or difference instead of sharing code with the
// library under test.

#include "mfomo/common.hpp"
#include "mfomo/game.hpp"
#include "mfomo/mdp.hpp"

#include <cmath>
#include <vector>

namespace mfomo::testing {

// argmin ||x - v|| over {x >= 0, 1'x = total} by enumerating every support
// set and checking the KKT candidate.  Exact for small dimensions.
inline Vec brute_force_simplex(const Vec& v, double total) {
  const int n = static_cast<int>(v.size());
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int m = __builtin_popcount(mask);
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) sum += v(i);
    const double shift = (sum - total) / m;
    Vec x = Vec::Zero(n);
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        x(i) = v(i) - shift;
        if (x(i) < -1e-12) feasible = false;
      }
    }
    if (!feasible) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

// argmin ||x - v|| over {x >= 0, 1'x <= budget}: either the clamp (budget
// slack) or a tight-budget simplex candidate.
inline Vec brute_force_capped(const Vec& v, double budget) {
  Vec clamped = v.cwiseMax(0.0);
  Vec tight = brute_force_simplex(v, budget);
  if (clamped.sum() <= budget + 1e-15) {
    if (tight.size() == 0) return clamped;
    return (clamped - v).squaredNorm() <= (tight - v).squaredNorm() ? clamped : tight;
  }
  return tight;
}

inline FiniteMdp random_mdp(int S, int A, int T, Rng& rng, double reward_scale = 1.0) {
  FiniteMdp m;
  m.S = S;
  m.A = A;
  m.T = T;
  m.mu0.resize(S);
  for (int s = 0; s < S; ++s) m.mu0(s) = exp_sample(rng);
  m.mu0 /= m.mu0.sum();
  for (int t = 0; t < T; ++t) {
    TransitionKernel kernel(A, Mat(S, S));
    for (int a = 0; a < A; ++a)
      for (int s = 0; s < S; ++s) {
        Vec row(S);
        for (int s2 = 0; s2 < S; ++s2) row(s2) = exp_sample(rng);
        kernel[a].row(s) = (row / row.sum()).transpose();
      }
    m.P.push_back(kernel);
  }
  for (int t = 0; t <= T; ++t) {
    Mat r(S, A);
    for (int a = 0; a < A; ++a)
      for (int s = 0; s < S; ++s) r(s, a) = reward_scale * uniform_pm1(rng);
    m.r.push_back(r);
  }
  return m;
}

inline int sample_index(const Vec& weights, Rng& rng) {
  double u = uniform_01(rng) * weights.sum();
  for (int i = 0; i < weights.size(); ++i) {
    u -= weights(i);
    if (u <= 0.0) return i;
  }
  return static_cast<int>(weights.size()) - 1;
}

struct RolloutStats {
  double mean_return = 0.0;
  double std_error = 0.0;
  Flow occupancy;  // empirical state-action frequencies per t
};

// Monte-Carlo evaluation of a policy by straight simulation.
inline RolloutStats rollout_policy(const FiniteMdp& m, const PolicySequence& pi,
                                   int episodes, Rng& rng) {
  RolloutStats stats;
  stats.occupancy.assign(static_cast<std::size_t>(m.T) + 1, Mat::Zero(m.S, m.A));
  double sum = 0.0, sumsq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int s = sample_index(m.mu0, rng);
    double ret = 0.0;
    for (int t = 0; t <= m.T; ++t) {
      const int a = sample_index(pi.pi[t].row(s).transpose(), rng);
      stats.occupancy[t](s, a) += 1.0;
      ret += m.r[t](s, a);
      if (t < m.T) s = sample_index(m.P[t][a].row(s).transpose(), rng);
    }
    sum += ret;
    sumsq += ret * ret;
  }
  stats.mean_return = sum / episodes;
  const double var = std::max(0.0, sumsq / episodes - stats.mean_return * stats.mean_return);
  stats.std_error = std::sqrt(var / episodes);
  for (Mat& slice : stats.occupancy) slice /= static_cast<double>(episodes);
  return stats;
}

}  // namespace mfomo::testing
