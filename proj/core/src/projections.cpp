#include "mfomo/projections.hpp"

#include <algorithm>
#include <cmath>

namespace mfomo {

ThetaBounds default_bounds(int S, int A, int T, double r_max) {
  ThetaBounds b;
  b.y_radius = 0.5 * S * (T + 1.0) * (T + 2.0) * r_max;
  b.z_budget = static_cast<double>(S) * A * (static_cast<double>(T) * T + T + 2.0) * r_max;
  return b;
}

Vec project_simplex(const Vec& v, double total) {
  const Eigen::Index n = v.size();
  if (n == 0) return v;
  if (total < 0.0) throw std::invalid_argument("project_simplex: total < 0");

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());

  // Find the pivot rho = max { j : u_j - (sum_{i<=j} u_i - total)/j > 0 }.
  double running_sum = 0.0, theta = 0.0;
  int rho = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    running_sum += u[j];
    const double candidate = (running_sum - total) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) {
      rho = static_cast<int>(j + 1);
      theta = candidate;
    }
  }
  if (rho == 0) {
    // Only possible when total == 0: everything clamps to zero.
    return Vec::Zero(n);
  }
  return (v.array() - theta).cwiseMax(0.0);
}

Vec project_capped_nonneg(const Vec& v, double budget) {
  if (budget < 0.0) throw std::invalid_argument("project_capped_nonneg: budget < 0");
  Vec clamped = v.cwiseMax(0.0);
  if (clamped.sum() <= budget) return clamped;
  return project_simplex(v, budget);
}

Vec project_l2_ball(const Vec& v, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_l2_ball: radius < 0");
  const double norm = v.norm();
  if (norm <= radius) return v;
  if (norm == 0.0) return v;
  return v * (radius / norm);
}

ThetaPoint project_theta(const ThetaPoint& th, const ThetaBounds& bounds) {
  ThetaPoint out;
  out.y = project_l2_ball(th.y, bounds.y_radius);
  out.z = project_capped_nonneg(th.z, bounds.z_budget);
  out.L.reserve(th.L.size());
  const Dims d = th.dims();
  for (const Mat& Lt : th.L)
    out.L.push_back(vec_to_mat(project_simplex(mat_to_vec(Lt), 1.0), d.S, d.A));
  return out;
}

}  // namespace mfomo
