#include "mfomo/mdp.hpp"

#include "mfomo/lp.hpp"

#include <cmath>

namespace mfomo {
namespace {

void check_rows_stochastic(const Mat& rows, double tol, const char* what) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (rows.row(i).minCoeff() < -tol)
      throw std::invalid_argument(std::string(what) + ": negative entry");
    if (std::abs(rows.row(i).sum() - 1.0) > tol)
      throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  }
}

}  // namespace

double FiniteMdp::r_max() const {
  double m = 0.0;
  for (const Mat& rt : r) m = std::max(m, rt.cwiseAbs().maxCoeff());
  return m;
}

void FiniteMdp::validate(double tol) const {
  if (S <= 0 || A <= 0 || T < 0) throw std::invalid_argument("FiniteMdp: bad dimensions");
  if (mu0.size() != S) throw std::invalid_argument("FiniteMdp: mu0 size");
  if (mu0.minCoeff() < -tol) throw std::invalid_argument("FiniteMdp: mu0 negative entry");
  if (std::abs(mu0.sum() - 1.0) > tol) throw std::invalid_argument("FiniteMdp: mu0 sum");
  if (static_cast<int>(P.size()) != T) throw std::invalid_argument("FiniteMdp: P size");
  if (static_cast<int>(r.size()) != T + 1) throw std::invalid_argument("FiniteMdp: r size");
  for (const auto& kernel : P) {
    if (static_cast<int>(kernel.size()) != A) throw std::invalid_argument("FiniteMdp: kernel size");
    for (const Mat& Pa : kernel) {
      if (Pa.rows() != S || Pa.cols() != S) throw std::invalid_argument("FiniteMdp: kernel shape");
      check_rows_stochastic(Pa, tol, "FiniteMdp transition");
    }
  }
  for (const Mat& rt : r) {
    if (rt.rows() != S || rt.cols() != A) throw std::invalid_argument("FiniteMdp: reward shape");
    if (!rt.allFinite()) throw std::invalid_argument("FiniteMdp: non-finite reward");
  }
}

void PolicySequence::validate(double tol) const {
  if (pi.empty()) throw std::invalid_argument("PolicySequence: empty");
  for (const Mat& p : pi) check_rows_stochastic(p, tol, "PolicySequence");
}

PolicySequence PolicySequence::uniform(int S, int A, int T) {
  PolicySequence p;
  p.pi.assign(static_cast<std::size_t>(T) + 1, Mat::Constant(S, A, 1.0 / A));
  return p;
}

void validate_occupation(const OccupationMeasure& d, double tol) {
  if (d.empty()) throw std::invalid_argument("OccupationMeasure: empty");
  for (const Mat& dt : d) {
    if (dt.minCoeff() < -tol) throw std::invalid_argument("OccupationMeasure: negative entry");
    if (std::abs(dt.sum() - 1.0) > tol)
      throw std::invalid_argument("OccupationMeasure: slice does not sum to 1");
  }
}

bool value_bounds_hold(const ValueTable& V, double r_max, double slack) {
  const int T = static_cast<int>(V.size()) - 1;
  for (int t = 0; t <= T; ++t)
    if (V[t].cwiseAbs().maxCoeff() > (T - t + 1.0) * r_max + slack) return false;
  return true;
}

OptimalValues value_iteration(const FiniteMdp& m) {
  OptimalValues out;
  out.V.resize(m.T + 1);
  out.Q.resize(m.T + 1);
  out.greedy.pi.resize(m.T + 1);

  for (int t = m.T; t >= 0; --t) {
    Mat Q = m.r[t];
    if (t < m.T)
      for (int a = 0; a < m.A; ++a) Q.col(a) += m.P[t][a] * out.V[t + 1];
    out.Q[t] = Q;
    out.V[t].resize(m.S);
    Mat greedy = Mat::Zero(m.S, m.A);
    for (int s = 0; s < m.S; ++s) {
      int arg = 0;
      double best = Q(s, 0);
      for (int a = 1; a < m.A; ++a)
        if (Q(s, a) > best) { best = Q(s, a); arg = a; }
      out.V[t](s) = best;
      greedy(s, arg) = 1.0;
    }
    out.greedy.pi[t] = greedy;
  }
  return out;
}

PolicyValues policy_evaluation(const FiniteMdp& m, const PolicySequence& pi) {
  PolicyValues out;
  out.V.resize(m.T + 1);
  out.Q.resize(m.T + 1);
  for (int t = m.T; t >= 0; --t) {
    Mat Q = m.r[t];
    if (t < m.T)
      for (int a = 0; a < m.A; ++a) Q.col(a) += m.P[t][a] * out.V[t + 1];
    out.Q[t] = Q;
    out.V[t] = (Q.array() * pi.pi[t].array()).rowwise().sum();
  }
  return out;
}

double initial_value(const FiniteMdp& m, const ValueTable& V) {
  return m.mu0.dot(V[0]);
}

OccupationMeasure propagate_occupation(const FiniteMdp& m, const PolicySequence& pi) {
  OccupationMeasure d(static_cast<std::size_t>(m.T) + 1);
  Vec marginal = m.mu0;
  for (int t = 0; t <= m.T; ++t) {
    d[t] = marginal.asDiagonal() * pi.pi[t];
    if (t < m.T) {
      Vec next = Vec::Zero(m.S);
      for (int a = 0; a < m.A; ++a) next += m.P[t][a].transpose() * d[t].col(a);
      marginal = next;
    }
  }
  return d;
}

PolicySequence policy_from_occupation(const OccupationMeasure& d,
                                      const PolicySequence* tie_policy) {
  PolicySequence out;
  out.pi.reserve(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    const Mat& dt = d[t];
    const int S = static_cast<int>(dt.rows()), A = static_cast<int>(dt.cols());
    Mat p(S, A);
    for (int s = 0; s < S; ++s) {
      const double marg = dt.row(s).sum();
      if (marg > 0.0) {
        p.row(s) = dt.row(s).cwiseMax(0.0) / marg;
        const double rowsum = p.row(s).sum();
        if (rowsum > 0.0) p.row(s) /= rowsum;
      } else if (tie_policy) {
        p.row(s) = tie_policy->pi[t].row(s);
      } else {
        p.row(s).setConstant(1.0 / A);
      }
    }
    out.pi.push_back(p);
  }
  return out;
}

LpOracleResult lp_oracle(const FiniteMdp& m) {
  const int n = m.S * m.A * (m.T + 1);
  if (n > 200) throw std::invalid_argument("lp_oracle: problem too large (S*A*(T+1) > 200)");
  m.validate(1e-9);

  const int rows = m.S * (m.T + 1);
  Mat A = Mat::Zero(rows, n);
  Vec b = Vec::Zero(rows);
  const int sa = m.S * m.A;

  // Flow-conservation rows for t = 0..T-1, then the initial-distribution rows.
  for (int t = 0; t < m.T; ++t) {
    const Mat W = kernel_to_w(m.P[t]);
    A.block(t * m.S, t * sa, m.S, sa) = W;
    for (int a = 0; a < m.A; ++a)
      A.block(t * m.S, (t + 1) * sa + a * m.S, m.S, m.S) -= Mat::Identity(m.S, m.S);
  }
  for (int a = 0; a < m.A; ++a)
    A.block(m.T * m.S, a * m.S, m.S, m.S) = Mat::Identity(m.S, m.S);
  b.tail(m.S) = m.mu0;

  Vec c(n);
  for (int t = 0; t <= m.T; ++t) c.segment(t * sa, sa) = -mat_to_vec(m.r[t]);

  LpProblem p{c, A, b, Vec()};
  LpSolution sol = simplex_lp(p);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("lp_oracle: LP not optimal (flow polytope is never empty)");

  LpOracleResult out;
  out.value = -sol.objective;
  out.d = vec_to_flow(sol.x, m.S, m.A, m.T);
  return out;
}

}  // namespace mfomo
