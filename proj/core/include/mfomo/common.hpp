#pragma once

// Shared scalar/array types and the index conventions used everywhere else.
//
// A finite-horizon problem has S states, A actions and horizon T, i.e. time
// steps t = 0..T.  Transitions exist for t = 0..T-1 only, rewards for all t.
// Per-time-step S x A arrays (flows, occupation measures, rewards, policies)
// are flattened column-major with the state index fastest:
//
//   flat(s, a) = s + a * S,   s in [0,S), a in [0,A).
//
// Stacked-over-time vectors place block t at offset t * S * A.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfomo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// One time step of dynamics: A matrices of shape S x S,
// kernel[a](s, s2) = P(s2 | s, a).  Rows are probability distributions.
using TransitionKernel = std::vector<Mat>;

// T+1 matrices of shape S x A.  Used for mean-field flows, occupation
// measures and reward tables alike.
using Flow = std::vector<Mat>;

inline int flat_sa(int s, int a, int S) { return s + a * S; }

struct Dims {
  int S = 0;
  int A = 0;
  int T = 0;

  int sa() const { return S * A; }
  int n_states_total() const { return S * (T + 1); }   // y lives here
  int n_flow_total() const { return S * A * (T + 1); } // z and vec(L) live here

  bool operator==(const Dims&) const = default;
};

// Eigen matrices are column-major, so reshaping an S x A matrix to a vector
// directly yields the flat(s, a) = s + a*S order.
inline Vec mat_to_vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat vec_to_mat(const Vec& v, int S, int A) {
  if (v.size() != static_cast<Eigen::Index>(S) * A)
    throw std::invalid_argument("vec_to_mat: size mismatch");
  return Eigen::Map<const Mat>(v.data(), S, A);
}

inline Vec flow_to_vec(const Flow& L) {
  if (L.empty()) return Vec();
  const Eigen::Index sa = L[0].size();
  Vec out(sa * static_cast<Eigen::Index>(L.size()));
  for (std::size_t t = 0; t < L.size(); ++t)
    out.segment(static_cast<Eigen::Index>(t) * sa, sa) = mat_to_vec(L[t]);
  return out;
}

inline Flow vec_to_flow(const Vec& v, int S, int A, int T) {
  const Eigen::Index sa = static_cast<Eigen::Index>(S) * A;
  if (v.size() != sa * (T + 1))
    throw std::invalid_argument("vec_to_flow: size mismatch");
  Flow L(static_cast<std::size_t>(T) + 1);
  for (int t = 0; t <= T; ++t)
    L[t] = vec_to_mat(v.segment(static_cast<Eigen::Index>(t) * sa, sa), S, A);
  return L;
}

// Stacks a per-(s,a) transition kernel into the S x (S*A) matrix whose row s2
// holds the flattened probabilities of landing in s2:
//   W(s2, s + a*S) = kernel[a](s, s2).
// Columns of W are probability distributions over the next state.
inline Mat kernel_to_w(const TransitionKernel& kernel) {
  const int A = static_cast<int>(kernel.size());
  if (A == 0) return Mat();
  const int S = static_cast<int>(kernel[0].rows());
  Mat W(S, S * A);
  for (int a = 0; a < A; ++a)
    W.block(0, a * S, S, S) = kernel[a].transpose();
  return W;
}

// Explicit draws (not std::*_distribution) so that seeded runs reproduce
// bit-for-bit across standard libraries.
inline double uniform_01(Rng& rng) {  // in [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_pm1(Rng& rng) { return 2.0 * uniform_01(rng) - 1.0; }

inline double exp_sample(Rng& rng) {  // Exp(1)
  return -std::log1p(-uniform_01(rng));
}

inline double normal_sample(Rng& rng) {  // N(0, 1), Box-Muller
  const double u1 = uniform_01(rng), u2 = uniform_01(rng);
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace mfomo
