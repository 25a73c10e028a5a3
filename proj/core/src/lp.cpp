#include "mfomo/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfomo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SimplexState {
  Mat A;                  // m x (n + m): real columns then artificials
  Vec b;                  // >= 0 after sign flips
  std::vector<int> basis; // m column indices
  int n_real = 0;
  int iterations = 0;
};

// One simplex run over the given costs.  Columns in [0, allowed_cols) may
// enter the basis.  Returns false on unboundedness.
bool run_simplex(SimplexState& st, const Vec& cost, int allowed_cols, double tol,
                 int max_iters) {
  const int m = static_cast<int>(st.A.rows());
  for (int it = 0; it < max_iters; ++it) {
    Mat B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = st.A.col(st.basis[i]);
    Eigen::PartialPivLU<Mat> lu(B);
    Vec xB = lu.solve(st.b);

    Vec cB(m);
    for (int i = 0; i < m; ++i) cB(i) = cost(st.basis[i]);
    Vec lambda = lu.transpose().solve(cB);

    // Bland: smallest-index column with negative reduced cost.
    int entering = -1;
    for (int j = 0; j < allowed_cols; ++j) {
      if (std::find(st.basis.begin(), st.basis.end(), j) != st.basis.end()) continue;
      const double rj = cost(j) - lambda.dot(st.A.col(j));
      if (rj < -tol) { entering = j; break; }
    }
    if (entering < 0) return true;  // optimal

    Vec d = lu.solve(st.A.col(entering));
    double best_ratio = kInf;
    for (int i = 0; i < m; ++i)
      if (d(i) > tol) best_ratio = std::min(best_ratio, std::max(xB(i), 0.0) / d(i));
    if (best_ratio == kInf) return false;  // unbounded direction

    // Bland tie-break: among (near-)minimal ratios keep the smallest basis
    // variable index.
    int leaving = -1;
    for (int i = 0; i < m; ++i) {
      if (d(i) > tol && std::max(xB(i), 0.0) / d(i) <= best_ratio + tol) {
        if (leaving < 0 || st.basis[i] < st.basis[leaving]) leaving = i;
      }
    }

    st.basis[leaving] = entering;
    ++st.iterations;
  }
  return true;  // iteration cap; caller checks residuals
}

LpSolution solve_standard_form(const Vec& c, const Mat& A, const Vec& b, double tol) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());

  SimplexState st;
  st.n_real = n;
  st.A.resize(m, n + m);
  st.A.leftCols(n) = A;
  st.b = b;
  // Flip rows so b >= 0 *before* installing the artificial identity block:
  // the artificial columns must stay +1 for the initial basis to be feasible.
  for (int i = 0; i < m; ++i) {
    if (st.b(i) < 0.0) {
      st.b(i) = -st.b(i);
      st.A.row(i).head(n) = -st.A.row(i).head(n);
    }
  }
  st.A.rightCols(m) = Mat::Identity(m, m);
  st.basis.resize(m);
  for (int i = 0; i < m; ++i) st.basis[i] = n + i;

  const int max_iters = 50 * (n + m + 10);
  LpSolution sol;

  // Phase 1: minimize the sum of artificials.
  Vec phase1_cost = Vec::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  run_simplex(st, phase1_cost, n, tol, max_iters);

  {
    Mat B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = st.A.col(st.basis[i]);
    Vec xB = Eigen::PartialPivLU<Mat>(B).solve(st.b);
    double art_sum = 0.0;
    for (int i = 0; i < m; ++i)
      if (st.basis[i] >= n) art_sum += std::abs(xB(i));
    if (art_sum > tol * (1.0 + st.b.lpNorm<Eigen::Infinity>()) * 10.0) {
      sol.status = LpStatus::infeasible;
      sol.iterations = st.iterations;
      return sol;
    }
  }

  // Drive leftover artificials out of the basis; rows where no real column
  // can pivot are redundant and get dropped.
  std::vector<int> keep_rows;
  {
    Mat B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = st.A.col(st.basis[i]);
    Eigen::PartialPivLU<Mat> lu(B);
    for (int i = 0; i < m; ++i) {
      if (st.basis[i] < n) continue;
      int replacement = -1;
      for (int j = 0; j < n; ++j) {
        if (std::find(st.basis.begin(), st.basis.end(), j) != st.basis.end()) continue;
        Vec dj = lu.solve(st.A.col(j));
        if (std::abs(dj(i)) > 1e-7) { replacement = j; break; }
      }
      if (replacement >= 0) {
        st.basis[i] = replacement;
        for (int k = 0; k < m; ++k) B.col(k) = st.A.col(st.basis[k]);
        lu.compute(B);
      }
    }
    for (int i = 0; i < m; ++i)
      if (st.basis[i] < n) keep_rows.push_back(i);
  }

  if (static_cast<int>(keep_rows.size()) < m) {
    Mat A2(static_cast<int>(keep_rows.size()), n + static_cast<int>(keep_rows.size()));
    Vec b2(static_cast<int>(keep_rows.size()));
    std::vector<int> basis2;
    for (std::size_t i = 0; i < keep_rows.size(); ++i) {
      A2.row(static_cast<int>(i)).head(n) = st.A.row(keep_rows[i]).head(n);
      b2(static_cast<int>(i)) = st.b(keep_rows[i]);
      basis2.push_back(st.basis[keep_rows[i]]);
    }
    A2.rightCols(static_cast<int>(keep_rows.size())) =
        Mat::Identity(static_cast<int>(keep_rows.size()), static_cast<int>(keep_rows.size()));
    st.A = A2;
    st.b = b2;
    st.basis = basis2;
  }

  // Phase 2 over the real columns.
  Vec phase2_cost = Vec::Zero(st.A.cols());
  phase2_cost.head(n) = c;
  if (!run_simplex(st, phase2_cost, n, tol, max_iters)) {
    sol.status = LpStatus::unbounded;
    sol.iterations = st.iterations;
    return sol;
  }

  const int m2 = static_cast<int>(st.A.rows());
  Mat B(m2, m2);
  for (int i = 0; i < m2; ++i) B.col(i) = st.A.col(st.basis[i]);
  Vec xB = Eigen::PartialPivLU<Mat>(B).solve(st.b);

  sol.status = LpStatus::optimal;
  sol.x = Vec::Zero(n);
  for (int i = 0; i < m2; ++i)
    if (st.basis[i] < n) sol.x(st.basis[i]) = std::max(xB(i), 0.0);
  sol.objective = c.dot(sol.x);
  sol.residual = (A * sol.x - b).lpNorm<Eigen::Infinity>();
  sol.iterations = st.iterations;
  return sol;
}

}  // namespace

LpSolution simplex_lp(const LpProblem& p, double tol) {
  const int n = static_cast<int>(p.A.cols());
  if (p.c.size() != n) throw std::invalid_argument("simplex_lp: c/A size mismatch");
  if (p.b.size() != p.A.rows()) throw std::invalid_argument("simplex_lp: b/A size mismatch");

  if (p.upper.size() == 0) return solve_standard_form(p.c, p.A, p.b, tol);
  if (p.upper.size() != n) throw std::invalid_argument("simplex_lp: upper size mismatch");

  // Fold finite upper bounds in as extra rows  x_i + slack_i = u_i.
  std::vector<int> bounded;
  for (int i = 0; i < n; ++i)
    if (std::isfinite(p.upper(i))) bounded.push_back(i);
  const int k = static_cast<int>(bounded.size());
  if (k == 0) return solve_standard_form(p.c, p.A, p.b, tol);

  const int m = static_cast<int>(p.A.rows());
  Mat A2 = Mat::Zero(m + k, n + k);
  A2.topLeftCorner(m, n) = p.A;
  Vec b2(m + k);
  b2.head(m) = p.b;
  for (int j = 0; j < k; ++j) {
    A2(m + j, bounded[j]) = 1.0;
    A2(m + j, n + j) = 1.0;
    b2(m + j) = p.upper(bounded[j]);
  }
  Vec c2 = Vec::Zero(n + k);
  c2.head(n) = p.c;

  LpSolution sol = solve_standard_form(c2, A2, b2, tol);
  if (sol.status == LpStatus::optimal) {
    Vec x = sol.x.head(n);
    sol.x = x;
    sol.objective = p.c.dot(x);
    sol.residual = (p.A * x - p.b).lpNorm<Eigen::Infinity>();
  }
  return sol;
}

}  // namespace mfomo
