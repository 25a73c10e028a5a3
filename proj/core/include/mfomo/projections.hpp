#pragma once

// Euclidean projections onto the pieces of the feasible set
//
//   Theta = { (y, z, L) :  L_t in the probability simplex for every t,
//                          z >= 0, 1'z <= z_budget,
//                          ||y||_2 <= y_radius }.

#include "mfomo/common.hpp"
#include "mfomo/theta.hpp"

namespace mfomo {

struct ThetaBounds {
  double y_radius = 0.0;  // ||y||_2 <= y_radius
  double z_budget = 0.0;  // z >= 0, sum(z) <= z_budget
};

// Bounds large enough that some exact solution is always inside:
//   y_radius = S (T+1) (T+2) r_max / 2,
//   z_budget = S A (T^2 + T + 2) r_max.
ThetaBounds default_bounds(int S, int A, int T, double r_max);

// argmin_x ||x - v||_2  s.t.  x >= 0, 1'x = total.  Sort-based water filling.
Vec project_simplex(const Vec& v, double total = 1.0);

// argmin_x ||x - v||_2  s.t.  x >= 0, 1'x <= budget.
// Clamp negatives; if the clamped sum fits the budget that is the answer,
// otherwise the budget is tight and this reduces to a simplex projection.
Vec project_capped_nonneg(const Vec& v, double budget);

// argmin_x ||x - v||_2  s.t.  ||x||_2 <= radius.
Vec project_l2_ball(const Vec& v, double radius);

// Projects each block of theta onto its factor of Theta (per-t simplex for L).
ThetaPoint project_theta(const ThetaPoint& th, const ThetaBounds& bounds);

}  // namespace mfomo
