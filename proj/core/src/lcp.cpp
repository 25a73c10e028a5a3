#include "mfomo/lcp.hpp"

#include <stdexcept>

#include "mfomo/lp.hpp"

namespace mfomo {

LcpSystem assemble_lcp(const GameModel& g) {
  if (!g.mean_field_independent_dynamics() || !g.linear_rewards())
    throw std::invalid_argument(
        "assemble_lcp: needs flow-independent dynamics and flow-linear rewards");

  LcpSystem sys;
  sys.dims = Dims{g.S(), g.A(), g.T()};
  const Dims& d = sys.dims;

  Flow uniform(d.T + 1, Mat::Constant(d.S, d.A, 1.0 / d.sa()));
  LinearSystem lin = build_system(g, uniform);
  sys.Abar = lin.dense();
  sys.b = lin.b;

  std::vector<Mat> rbar, Rbar;
  g.linear_reward_payload(rbar, Rbar);
  const Eigen::Index nl = d.n_flow_total();
  sys.cbar = Vec::Zero(nl);
  sys.Cbar = Mat::Zero(nl, nl);
  for (int t = 0; t <= d.T; ++t) {
    const Eigen::Index off = static_cast<Eigen::Index>(t) * d.sa();
    sys.cbar.segment(off, d.sa()) = -mat_to_vec(rbar[t]);
    sys.Cbar.block(off, off, d.sa(), d.sa()) = -Rbar[t];
  }
  return sys;
}

namespace {

// Feasibility program for one support: variables [L_P; z_Q; y+; y-] >= 0
// with Q the complement of P, subject to the constraint rows and the
// stationarity rows of the complementarity system.
struct SupportCandidate {
  bool feasible = false;
  double residual = 0.0;
  ThetaPoint theta;
};

SupportCandidate try_support(const LcpSystem& sys, const std::vector<int>& P,
                             const std::vector<int>& Q, double tol) {
  const Dims& d = sys.dims;
  const Eigen::Index ny = d.n_states_total(), nl = d.n_flow_total();
  const Eigen::Index np = static_cast<Eigen::Index>(P.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(Q.size());

  LpProblem lp;
  lp.A = Mat::Zero(ny + nl, np + nq + 2 * ny);
  for (Eigen::Index j = 0; j < np; ++j) lp.A.block(0, j, ny, 1) = sys.Abar.col(P[j]);
  for (Eigen::Index j = 0; j < np; ++j)
    lp.A.block(ny, j, nl, 1) = -sys.Cbar.col(P[j]);
  for (Eigen::Index j = 0; j < nq; ++j) lp.A(ny + Q[j], np + j) = 1.0;
  lp.A.block(ny, np + nq, nl, ny) = sys.Abar.transpose();
  lp.A.block(ny, np + nq + ny, nl, ny) = -sys.Abar.transpose();
  lp.b = Vec(ny + nl);
  lp.b << sys.b, sys.cbar;
  lp.c = Vec::Zero(lp.A.cols());

  const LpSolution sol = simplex_lp(lp);
  SupportCandidate cand;
  if (sol.status != LpStatus::optimal) return cand;
  if (sol.residual > tol * (1.0 + lp.b.lpNorm<Eigen::Infinity>())) return cand;

  Vec lvec = Vec::Zero(nl), zvec = Vec::Zero(nl);
  for (Eigen::Index j = 0; j < np; ++j) lvec(P[j]) = sol.x(j);
  for (Eigen::Index j = 0; j < nq; ++j) zvec(Q[j]) = sol.x(np + j);
  cand.feasible = true;
  cand.residual = sol.residual;
  cand.theta.y = sol.x.segment(np + nq, ny) - sol.x.tail(ny);
  cand.theta.z = zvec;
  cand.theta.L = vec_to_flow(lvec, d.S, d.A, d.T);
  return cand;
}

}  // namespace

EnumerationResult solve_by_enumeration(const GameModel& g, const EnumerationOptions& opts) {
  const LcpSystem sys = assemble_lcp(g);
  const Dims& d = sys.dims;
  const int nl = static_cast<int>(d.n_flow_total());
  if (nl > opts.max_dim)
    throw std::invalid_argument("solve_by_enumeration: instance too large for 2^n supports");

  // Bit masks covering each time slice of the flow vector.
  std::vector<std::uint32_t> slice_mask(d.T + 1, 0);
  for (int t = 0; t <= d.T; ++t)
    for (int i = 0; i < d.sa(); ++i)
      slice_mask[t] |= (1u << (t * d.sa() + i));

  EnumerationResult out;
  const std::uint64_t total = std::uint64_t{1} << nl;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    bool empty_slice = false;
    for (int t = 0; t <= d.T && !empty_slice; ++t)
      if ((mask & slice_mask[t]) == 0) empty_slice = true;
    if (empty_slice) {
      ++out.pruned;
      continue;
    }

    std::vector<int> P, Q;
    for (int i = 0; i < nl; ++i)
      (mask >> i) & 1u ? P.push_back(i) : Q.push_back(i);

    ++out.supports_examined;
    SupportCandidate cand = try_support(sys, P, Q, opts.residual_tol);
    if (!cand.feasible) continue;

    bool duplicate = false;
    for (const LcpSolution& known : out.solutions) {
      double dist = 0.0;
      for (int t = 0; t <= d.T; ++t)
        dist = std::max(dist,
                        (known.theta.L[t] - cand.theta.L[t]).lpNorm<Eigen::Infinity>());
      if (dist <= opts.dedupe_tol) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    LcpSolution solp;
    // Swap the unbounded LP multipliers for the bounded warm-start pair; the
    // flow is untouched and the point lands inside the feasible box.
    solp.theta = solution_modification(g, cand.theta);
    solp.pi = policy_from_occupation(solp.theta.L);
    solp.report = verify_nash(g, solp.pi, solp.theta.L, opts.nash_tol);
    solp.support = P;
    if (!solp.report.is_nash) continue;  // spurious numerical candidate
    out.solutions.push_back(std::move(solp));
  }
  return out;
}

}  // namespace mfomo
