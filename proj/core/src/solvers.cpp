#include "mfomo/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace mfomo {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ThetaPoint step_theta(const ThetaPoint& th, const Vec& direction, double eta,
                      const ThetaBounds& bounds) {
  const Dims d = th.dims();
  return project_theta(ThetaPoint::from_vector(th.to_vector() - eta * direction, d), bounds);
}

// Shared per-solver trace bookkeeping.  The first record fixes the
// exploitability normalizer.
struct Tracer {
  const GameModel* g = nullptr;
  const TraceCallback* cb = nullptr;
  Clock::time_point t0 = Clock::now();
  std::vector<IterationRecord> trace;
  double expl0 = kNaN;
  bool zero_initial_expl = false;

  void record(int iter, const ThetaPoint& th, const ObjectiveBreakdown& f, double gmn,
              double eta) {
    IterationRecord rec;
    rec.iter = iter;
    rec.time_s = seconds_since(t0);
    rec.f_total = f.total;
    rec.f_consistency = f.consistency;
    rec.f_bellman = f.bellman;
    rec.f_complementarity = f.complementarity;
    rec.grad_map_norm = gmn;
    rec.expl = exploitability(*g, policy_from_occupation(th.L));
    if (std::isnan(expl0)) {
      expl0 = rec.expl;
      zero_initial_expl = expl0 <= 0.0;
    }
    rec.expl_normalized = zero_initial_expl ? kNaN : rec.expl / expl0;
    rec.step_size = eta;
    trace.push_back(rec);
    if (cb && *cb) (*cb)(rec);
  }
};

double scheduled_step(const SolverConfig& cfg, double base, int k) {
  if (cfg.step_rule == StepRule::decreasing)
    return base / (std::sqrt(k + 3.0) * std::log2(k + 3.0));
  return base;
}

double base_step(const GameModel& g, const ThetaBounds& bounds, const SolverConfig& cfg,
                 double fallback) {
  if (cfg.step_size > 0.0) return cfg.step_size;
  if (fallback > 0.0) return fallback;
  return 1.0 / estimate_smoothness(g, bounds, 40, cfg.seed ^ 0x5eedbeefULL);
}

// Projected (stochastic) gradient descent.  `stochastic` only switches the
// gradient estimate; the update, trace and stopping logic are shared, and a
// full batch goes through the exact-gradient branch so spgd with
// batch_size = n reproduces pgd exactly.
SolveResult run_projected_descent(const GameModel& g, const ThetaPoint& th0,
                                  const ThetaBounds& bounds, const SolverConfig& cfg,
                                  const TraceCallback& cb, bool stochastic) {
  const Dims d = th0.dims();
  const int n_terms = objective_term_count(d);
  const bool full_batch =
      !stochastic || cfg.batch_size <= 0 || cfg.batch_size >= n_terms;
  Rng rng(cfg.seed);
  std::vector<int> pool(n_terms);
  std::iota(pool.begin(), pool.end(), 0);

  const double eta_base = base_step(g, bounds, cfg, 0.0);

  SolveResult out;
  Tracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;
  const int every = std::max(1, cfg.eval_every);

  ThetaPoint th = project_theta(th0, bounds);
  ObjectiveBreakdown f = objective(g, th);
  const double diverge_guard = 1e3 * (f.total + 1.0);
  out.stop = StopReason::max_iters;

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    Gradient grad;
    if (full_batch) {
      grad = gradient(g, th);
    } else {
      const int B = cfg.batch_size;
      for (int i = 0; i < B; ++i) {
        const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(n_terms - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<int> batch(pool.begin(), pool.begin() + B);
      grad = partial_gradient(g, th, batch);
      const double scale = static_cast<double>(n_terms) / B;
      grad.y *= scale;
      grad.z *= scale;
      grad.L *= scale;
    }
    const Vec dir = grad.to_vector();
    const Vec th_vec = th.to_vector();

    double eta = scheduled_step(cfg, eta_base, k);
    ThetaPoint next;
    ObjectiveBreakdown f_next;
    if (cfg.step_rule == StepRule::armijo) {
      for (int halvings = 0;; ++halvings) {
        next = step_theta(th, dir, eta, bounds);
        f_next = objective(g, next);
        const Vec diff = next.to_vector() - th_vec;
        const double model =
            f.total + dir.dot(diff) + diff.squaredNorm() / (2.0 * eta);
        if (f_next.total <= model + 1e-14 * (1.0 + std::abs(f.total)) || halvings >= 50) break;
        eta *= 0.5;
      }
    } else {
      next = step_theta(th, dir, eta, bounds);
      f_next = objective(g, next);
    }
    const double gmn = (th_vec - next.to_vector()).norm() / eta;

    if (k % every == 0) tracer.record(k, th, f, gmn, eta);

    if (!std::isfinite(f_next.total) || f_next.total > diverge_guard) {
      out.stop = StopReason::diverged;  // keep the pre-blowup iterate
      break;
    }
    th = next;
    f = f_next;
    ++k;  // th now corresponds to iterate k (post-increment view for the exit records)
    if (cfg.objective_tol > 0.0 && f.total <= cfg.objective_tol) {
      out.stop = StopReason::objective_tol;
      break;
    }
    if (cfg.stationarity_tol > 0.0 && gmn <= cfg.stationarity_tol) {
      out.stop = StopReason::stationarity_tol;
      break;
    }
    if (cfg.wall_clock_budget_s > 0.0 &&
        seconds_since(tracer.t0) >= cfg.wall_clock_budget_s) {
      out.stop = StopReason::wall_clock;
      break;
    }
    --k;  // undo the bookkeeping increment; the for-loop advances k itself
  }

  // Final record at the returned iterate.
  {
    const Gradient grad = gradient(g, th);
    const double eta = scheduled_step(cfg, eta_base, k);
    tracer.record(k, th, f, gradient_map_norm(th, grad, bounds, eta), eta);
  }

  out.theta = th;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

}  // namespace

SolveResult pgd(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                const SolverConfig& cfg, const TraceCallback& cb) {
  return run_projected_descent(g, th0, bounds, cfg, cb, /*stochastic=*/false);
}

SolveResult spgd(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                 const SolverConfig& cfg, const TraceCallback& cb) {
  return run_projected_descent(g, th0, bounds, cfg, cb, /*stochastic=*/true);
}

SolveResult adam_solve(const GameModel& g, const ThetaPoint& th0, const ThetaBounds& bounds,
                       const SolverConfig& cfg, const TraceCallback& cb) {
  const double eta_base = base_step(g, bounds, cfg, 0.01);

  SolveResult out;
  Tracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;
  const int every = std::max(1, cfg.eval_every);

  ThetaPoint th = project_theta(th0, bounds);
  ObjectiveBreakdown f = objective(g, th);
  const double diverge_guard = 1e3 * (f.total + 1.0);
  out.stop = StopReason::max_iters;

  const Eigen::Index dim = th.to_vector().size();
  Vec m = Vec::Zero(dim), v = Vec::Zero(dim);

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    const Gradient grad = gradient(g, th);
    const Vec gvec = grad.to_vector();
    const double eta = scheduled_step(cfg, eta_base, k);
    const double gmn = gradient_map_norm(th, grad, bounds, eta);

    m = cfg.beta1 * m + (1.0 - cfg.beta1) * gvec;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * gvec.cwiseProduct(gvec);
    const double bc1 = 1.0 - std::pow(cfg.beta1, k + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, k + 1);
    const Vec mhat = m / bc1;
    const Vec vhat = v / bc2;
    Vec numer = mhat;
    if (cfg.variant == AdamVariant::nadam)
      numer = cfg.beta1 * mhat + ((1.0 - cfg.beta1) / bc1) * gvec;
    const Vec dir = numer.array() / (vhat.array().sqrt() + cfg.eps);

    ThetaPoint next = step_theta(th, dir, eta, bounds);
    ObjectiveBreakdown f_next = objective(g, next);

    if (k % every == 0) tracer.record(k, th, f, gmn, eta);

    if (!std::isfinite(f_next.total) || f_next.total > diverge_guard) {
      out.stop = StopReason::diverged;
      break;
    }
    th = next;
    f = f_next;
    ++k;
    if (cfg.objective_tol > 0.0 && f.total <= cfg.objective_tol) {
      out.stop = StopReason::objective_tol;
      break;
    }
    if (cfg.stationarity_tol > 0.0 && gmn <= cfg.stationarity_tol) {
      out.stop = StopReason::stationarity_tol;
      break;
    }
    if (cfg.wall_clock_budget_s > 0.0 &&
        seconds_since(tracer.t0) >= cfg.wall_clock_budget_s) {
      out.stop = StopReason::wall_clock;
      break;
    }
    --k;
  }

  {
    const Gradient grad = gradient(g, th);
    const double eta = scheduled_step(cfg, eta_base, k);
    tracer.record(k, th, f, gradient_map_norm(th, grad, bounds, eta), eta);
  }

  out.theta = th;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

ReparamPoint reparam_from_theta(const ThetaPoint& th, const ThetaBounds& bounds) {
  const Dims d = th.dims();
  constexpr double floor = 1e-12;
  ReparamPoint p;
  p.u.resize(d.T + 1);
  for (int t = 0; t <= d.T; ++t) {
    Mat u = th.L[t].array().max(floor).log();
    p.u[t] = u.array() - u.mean();
  }
  p.v = Vec::Zero(th.z.size());
  p.w0 = 0.0;
  if (bounds.z_budget > 0.0) {
    p.v = th.z.array().max(floor).log();
    p.w0 = std::log(std::max(bounds.z_budget - th.z.sum(), floor));
    const double shift = (p.v.sum() + p.w0) / (p.v.size() + 1.0);
    p.v.array() -= shift;
    p.w0 -= shift;
  }
  p.w = Vec::Zero(th.y.size());
  const double scale =
      bounds.y_radius / std::sqrt(static_cast<double>(th.y.size()));
  if (scale > 0.0)
    for (Eigen::Index i = 0; i < th.y.size(); ++i)
      p.w(i) = std::asin(std::clamp(th.y(i) / scale, -1.0, 1.0));
  return p;
}

ThetaPoint reparam_to_theta(const ReparamPoint& p, const ThetaBounds& bounds) {
  ThetaPoint th;
  th.L.resize(p.u.size());
  for (std::size_t t = 0; t < p.u.size(); ++t) {
    const Mat e = (p.u[t].array() - p.u[t].maxCoeff()).exp();
    th.L[t] = e / e.sum();
  }
  th.z = Vec::Zero(p.v.size());
  if (bounds.z_budget > 0.0 && p.v.size() > 0) {
    const double m = std::max(p.v.maxCoeff(), p.w0);
    const Vec e = (p.v.array() - m).exp();
    const double denom = e.sum() + std::exp(p.w0 - m);
    th.z = (bounds.z_budget / denom) * e;
  }
  th.y = Vec::Zero(p.w.size());
  const double scale =
      p.w.size() > 0 ? bounds.y_radius / std::sqrt(static_cast<double>(p.w.size())) : 0.0;
  for (Eigen::Index i = 0; i < p.w.size(); ++i) th.y(i) = scale * std::sin(p.w(i));
  return th;
}

namespace {

Vec pack_reparam(const ReparamPoint& p) {
  const Vec u = flow_to_vec(p.u);
  Vec out(u.size() + p.v.size() + p.w.size() + 1);
  out << u, p.v, p.w, p.w0;
  return out;
}

ReparamPoint unpack_reparam(const Vec& x, const Dims& d) {
  ReparamPoint p;
  const Eigen::Index nl = d.n_flow_total(), ny = d.n_states_total();
  p.u = vec_to_flow(x.head(nl), d.S, d.A, d.T);
  p.v = x.segment(nl, nl);
  p.w = x.segment(2 * nl, ny);
  p.w0 = x(2 * nl + ny);
  return p;
}

// Chain rule from theta-space gradients to the unconstrained coordinates.
Vec reparam_gradient(const ReparamPoint& p, const ThetaPoint& th, const Gradient& gth,
                     const ThetaBounds& bounds) {
  const Dims d = th.dims();
  Flow gu(d.T + 1);
  for (int t = 0; t <= d.T; ++t) {
    const Mat G = vec_to_mat(gth.L.segment(static_cast<Eigen::Index>(t) * d.sa(), d.sa()),
                             d.S, d.A);
    const double dot = (th.L[t].array() * G.array()).sum();
    gu[t] = th.L[t].array() * (G.array() - dot);
  }
  Vec gv = Vec::Zero(th.z.size());
  double gw0 = 0.0;
  const double B = bounds.z_budget;
  if (B > 0.0) {
    const double zg = th.z.dot(gth.z);
    gv = th.z.array() * gth.z.array() - th.z.array() * (zg / B);
    gw0 = -(std::max(B - th.z.sum(), 0.0) / B) * zg;
  }
  Vec gw = Vec::Zero(th.y.size());
  const double scale =
      th.y.size() > 0 ? bounds.y_radius / std::sqrt(static_cast<double>(th.y.size())) : 0.0;
  for (Eigen::Index i = 0; i < th.y.size(); ++i)
    gw(i) = gth.y(i) * scale * std::cos(p.w(i));

  ReparamPoint g;
  g.u = gu;
  g.v = gv;
  g.w = gw;
  g.w0 = gw0;
  return pack_reparam(g);
}

}  // namespace

SolveResult reparametrized_solve(const GameModel& g, const ThetaPoint& th0,
                                 const ThetaBounds& bounds, const SolverConfig& cfg,
                                 const TraceCallback& cb) {
  const Dims d = th0.dims();
  const double eta_base = cfg.step_size > 0.0 ? cfg.step_size : 0.01;

  SolveResult out;
  Tracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;
  const int every = std::max(1, cfg.eval_every);

  Vec x = pack_reparam(reparam_from_theta(project_theta(th0, bounds), bounds));
  ThetaPoint th = reparam_to_theta(unpack_reparam(x, d), bounds);
  ObjectiveBreakdown f = objective(g, th);
  const double diverge_guard = 1e3 * (f.total + 1.0);
  out.stop = StopReason::max_iters;

  Vec m = Vec::Zero(x.size()), v = Vec::Zero(x.size());

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    const ReparamPoint p = unpack_reparam(x, d);
    const Gradient grad = gradient(g, th);
    const Vec gvec = reparam_gradient(p, th, grad, bounds);
    const double eta = scheduled_step(cfg, eta_base, k);
    const double gmn = gradient_map_norm(th, grad, bounds, eta);

    m = cfg.beta1 * m + (1.0 - cfg.beta1) * gvec;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * gvec.cwiseProduct(gvec);
    const double bc1 = 1.0 - std::pow(cfg.beta1, k + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, k + 1);
    const Vec mhat = m / bc1;
    const Vec vhat = v / bc2;
    Vec numer = mhat;
    if (cfg.variant == AdamVariant::nadam)
      numer = cfg.beta1 * mhat + ((1.0 - cfg.beta1) / bc1) * gvec;
    const Vec dir = numer.array() / (vhat.array().sqrt() + cfg.eps);

    const Vec x_next = x - eta * dir;
    ThetaPoint th_next = reparam_to_theta(unpack_reparam(x_next, d), bounds);
    ObjectiveBreakdown f_next = objective(g, th_next);

    if (k % every == 0) tracer.record(k, th, f, gmn, eta);

    if (!std::isfinite(f_next.total) || f_next.total > diverge_guard) {
      out.stop = StopReason::diverged;
      break;
    }
    x = x_next;
    th = th_next;
    f = f_next;
    ++k;
    if (cfg.objective_tol > 0.0 && f.total <= cfg.objective_tol) {
      out.stop = StopReason::objective_tol;
      break;
    }
    if (cfg.stationarity_tol > 0.0 && gmn <= cfg.stationarity_tol) {
      out.stop = StopReason::stationarity_tol;
      break;
    }
    if (cfg.wall_clock_budget_s > 0.0 &&
        seconds_since(tracer.t0) >= cfg.wall_clock_budget_s) {
      out.stop = StopReason::wall_clock;
      break;
    }
    --k;
  }

  {
    const Gradient grad = gradient(g, th);
    const double eta = scheduled_step(cfg, eta_base, k);
    tracer.record(k, th, f, gradient_map_norm(th, grad, bounds, eta), eta);
  }

  out.theta = th;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

double gradient_map_norm(const ThetaPoint& th, const Gradient& grad,
                         const ThetaBounds& bounds, double eta) {
  const ThetaPoint stepped = step_theta(th, grad.to_vector(), eta, bounds);
  return (th.to_vector() - stepped.to_vector()).norm() / eta;
}

ThetaPoint sample_feasible(const Dims& d, const ThetaBounds& bounds, Rng& rng) {
  ThetaPoint th;
  th.L.resize(d.T + 1);
  for (int t = 0; t <= d.T; ++t) {
    Mat slice(d.S, d.A);
    for (int a = 0; a < d.A; ++a)
      for (int s = 0; s < d.S; ++s) slice(s, a) = exp_sample(rng);
    th.L[t] = slice / slice.sum();
  }
  Vec ze(d.n_flow_total());
  for (Eigen::Index i = 0; i < ze.size(); ++i) ze(i) = exp_sample(rng);
  th.z = (bounds.z_budget * uniform_01(rng) / ze.sum()) * ze;
  Vec y(d.n_states_total());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = normal_sample(rng);
  const double norm = y.norm();
  const double radius =
      bounds.y_radius * std::pow(uniform_01(rng), 1.0 / static_cast<double>(y.size()));
  if (norm > 0.0)
    th.y = (radius / norm) * y;
  else
    th.y = Vec::Zero(y.size());
  return th;
}

double estimate_smoothness(const GameModel& g, const ThetaBounds& bounds, int samples,
                           std::uint64_t seed) {
  const Dims d{g.S(), g.A(), g.T()};
  Rng rng(seed);

  double best = 0.0;
  Vec best_a, best_b;
  auto grad_at = [&](const Vec& x) {
    return gradient(g, ThetaPoint::from_vector(x, d)).to_vector();
  };
  auto consider = [&](const Vec& a, const Vec& ga, const Vec& b, const Vec& gb) {
    const double dist = (a - b).norm();
    if (dist < 1e-10) return;
    const double ratio = (ga - gb).norm() / dist;
    if (ratio > best) {
      best = ratio;
      best_a = a;
      best_b = b;
    }
  };

  for (int i = 0; i < samples; ++i) {
    const Vec a = sample_feasible(d, bounds, rng).to_vector();
    const Vec b = sample_feasible(d, bounds, rng).to_vector();
    const Vec ga = grad_at(a), gb = grad_at(b);
    consider(a, ga, b, gb);

    // Local pair: tiny feasible perturbation of a.
    Vec delta(a.size());
    for (Eigen::Index j = 0; j < delta.size(); ++j) delta(j) = uniform_pm1(rng);
    const Vec c = project_theta(ThetaPoint::from_vector(a + 1e-4 * delta, d), bounds)
                      .to_vector();
    consider(a, ga, c, grad_at(c));
  }

  // Bisection refinement toward the steeper half of the worst pair.
  for (int r = 0; r < 8 && best_a.size() > 0; ++r) {
    const Vec mid =
        project_theta(ThetaPoint::from_vector(0.5 * (best_a + best_b), d), bounds)
            .to_vector();
    const Vec a = best_a, b = best_b;
    const Vec ga = grad_at(a), gb = grad_at(b), gm = grad_at(mid);
    consider(a, ga, mid, gm);
    consider(mid, gm, b, gb);
    if ((best_a - a).norm() == 0.0 && (best_b - b).norm() == 0.0) break;
  }

  return 1.5 * std::max(best, 1e-9);
}

}  // namespace mfomo
