#include "mfomo/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfomo {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct BaselineTracer {
  const GameModel* g = nullptr;
  const TraceCallback* cb = nullptr;
  Clock::time_point t0 = Clock::now();
  std::vector<IterationRecord> trace;
  double expl0 = kNaN;
  bool zero_initial_expl = false;

  void record(int iter, const PolicySequence& pi, double step) {
    IterationRecord rec;
    rec.iter = iter;
    rec.time_s = seconds_since(t0);
    rec.f_total = rec.f_consistency = rec.f_bellman = rec.f_complementarity = kNaN;
    rec.grad_map_norm = kNaN;
    rec.expl = exploitability(*g, pi);
    if (std::isnan(expl0)) {
      expl0 = rec.expl;
      zero_initial_expl = expl0 <= 0.0;
    }
    rec.expl_normalized = zero_initial_expl ? kNaN : rec.expl / expl0;
    rec.step_size = step;
    trace.push_back(rec);
    if (cb && *cb) (*cb)(rec);
  }
};

PolicySequence best_response(const GameModel& g, const Flow& L) {
  return value_iteration(induced_mdp(g, L)).greedy;
}

bool out_of_time(const BaselineConfig& cfg, Clock::time_point t0) {
  return cfg.wall_clock_budget_s > 0.0 && seconds_since(t0) >= cfg.wall_clock_budget_s;
}

}  // namespace

BaselineResult fictitious_play(const GameModel& g, const PolicySequence& pi0,
                               const BaselineConfig& cfg, const TraceCallback& cb) {
  const int every = std::max(1, cfg.eval_every);
  BaselineTracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;

  Flow avg = propagate_flow(g, pi0);
  PolicySequence pi = policy_from_occupation(avg, &pi0);

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    if (k % every == 0) tracer.record(k, pi, 1.0 / (k + 1));
    const PolicySequence br = best_response(g, avg);
    const Flow target = propagate_flow(g, br);
    const double w = 1.0 / (k + 1);
    for (std::size_t t = 0; t < avg.size(); ++t)
      avg[t] += w * (target[t] - avg[t]);
    pi = policy_from_occupation(avg, &pi0);
    if (out_of_time(cfg, tracer.t0)) {
      ++k;
      break;
    }
  }
  tracer.record(k, pi, k > 0 ? 1.0 / k : 1.0);

  BaselineResult out;
  out.pi = pi;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

BaselineResult online_mirror_descent(const GameModel& g, const PolicySequence& pi0,
                                     const BaselineConfig& cfg, const TraceCallback& cb) {
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("online_mirror_descent: learning_rate must be > 0");
  const int every = std::max(1, cfg.eval_every);
  BaselineTracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;

  // Logit accumulator; starting at log pi0 makes iteration zero reproduce pi0.
  std::vector<Mat> logits(pi0.pi.size());
  for (std::size_t t = 0; t < pi0.pi.size(); ++t)
    logits[t] = pi0.pi[t].array().max(1e-300).log();

  auto play = [&]() {
    PolicySequence pi = pi0;
    for (std::size_t t = 0; t < logits.size(); ++t)
      for (Eigen::Index s = 0; s < logits[t].rows(); ++s) {
        const Eigen::RowVectorXd row = logits[t].row(s);
        const Eigen::RowVectorXd e = (row.array() - row.maxCoeff()).exp();
        pi.pi[t].row(s) = e / e.sum();
      }
    return pi;
  };

  PolicySequence pi = play();
  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    if (k % every == 0) tracer.record(k, pi, cfg.learning_rate);
    const Flow L = propagate_flow(g, pi);
    const PolicyValues vals = policy_evaluation(induced_mdp(g, L), pi);
    for (std::size_t t = 0; t < logits.size(); ++t)
      logits[t] += cfg.learning_rate * vals.Q[t];
    pi = play();
    if (out_of_time(cfg, tracer.t0)) {
      ++k;
      break;
    }
  }
  tracer.record(k, pi, cfg.learning_rate);

  BaselineResult out;
  out.pi = pi;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

BaselineResult damped_fixed_point(const GameModel& g, const PolicySequence& pi0,
                                  const BaselineConfig& cfg, const TraceCallback& cb) {
  if (!(cfg.damping > 0.0) || cfg.damping > 1.0)
    throw std::invalid_argument("damped_fixed_point: damping must be in (0, 1]");
  const int every = std::max(1, cfg.eval_every);
  BaselineTracer tracer;
  tracer.g = &g;
  tracer.cb = &cb;

  PolicySequence pi = pi0;
  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    if (k % every == 0) tracer.record(k, pi, cfg.damping);
    const PolicySequence br = best_response(g, propagate_flow(g, pi));
    for (std::size_t t = 0; t < pi.pi.size(); ++t)
      pi.pi[t] = (1.0 - cfg.damping) * pi.pi[t] + cfg.damping * br.pi[t];
    if (out_of_time(cfg, tracer.t0)) {
      ++k;
      break;
    }
  }
  tracer.record(k, pi, cfg.damping);

  BaselineResult out;
  out.pi = pi;
  out.trace = std::move(tracer.trace);
  out.zero_initial_expl = tracer.zero_initial_expl;
  return out;
}

BaselineResult run_baseline(const GameModel& g, const PolicySequence& pi0,
                            const BaselineConfig& cfg, const TraceCallback& cb) {
  switch (cfg.method) {
    case BaselineMethod::fictitious_play:
      return fictitious_play(g, pi0, cfg, cb);
    case BaselineMethod::online_mirror_descent:
      return online_mirror_descent(g, pi0, cfg, cb);
    case BaselineMethod::damped_fixed_point:
      return damped_fixed_point(g, pi0, cfg, cb);
  }
  throw std::invalid_argument("run_baseline: unknown method");
}

}  // namespace mfomo
