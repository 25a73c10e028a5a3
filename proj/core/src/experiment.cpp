#include "mfomo/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mfomo/mfomo.hpp"
#include "mfomo/projections.hpp"

namespace mfomo {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunMethod method_from_string(const std::string& s) {
  if (s == "pgd") return RunMethod::pgd;
  if (s == "spgd") return RunMethod::spgd;
  if (s == "adam") return RunMethod::adam;
  if (s == "nadam") return RunMethod::nadam;
  if (s == "reparametrized") return RunMethod::reparametrized;
  if (s == "fictitious_play") return RunMethod::fictitious_play;
  if (s == "online_mirror_descent") return RunMethod::online_mirror_descent;
  if (s == "damped_fixed_point") return RunMethod::damped_fixed_point;
  throw std::invalid_argument("ExperimentConfig: unknown method '" + s + "'");
}

StepRule step_rule_from_string(const std::string& s) {
  if (s == "constant") return StepRule::constant;
  if (s == "decreasing") return StepRule::decreasing;
  if (s == "armijo") return StepRule::armijo;
  throw std::invalid_argument("ExperimentConfig: unknown step_rule '" + s + "'");
}

SolverEntry parse_solver_entry(const json& sj) {
  SolverEntry e;
  e.method = method_from_string(sj.at("method").get<std::string>());
  e.name = sj.value("name", sj.at("method").get<std::string>());
  if (e.name.empty() || e.name.find_first_of("/\\") != std::string::npos)
    throw std::invalid_argument("ExperimentConfig: bad solver name '" + e.name + "'");

  if (is_baseline(e.method)) {
    BaselineConfig& b = e.baseline;
    switch (e.method) {
      case RunMethod::fictitious_play: b.method = BaselineMethod::fictitious_play; break;
      case RunMethod::online_mirror_descent:
        b.method = BaselineMethod::online_mirror_descent;
        break;
      default: b.method = BaselineMethod::damped_fixed_point; break;
    }
    b.learning_rate = sj.value("learning_rate", b.learning_rate);
    b.damping = sj.value("damping", b.damping);
    b.max_iters = sj.value("max_iters", b.max_iters);
    b.eval_every = sj.value("eval_every", b.eval_every);
    b.wall_clock_budget_s = sj.value("wall_clock_budget_s", b.wall_clock_budget_s);
  } else {
    SolverConfig& c = e.solver;
    c.max_iters = sj.value("max_iters", c.max_iters);
    c.step_size = sj.value("step_size", c.step_size);
    if (sj.contains("step_rule"))
      c.step_rule = step_rule_from_string(sj.at("step_rule").get<std::string>());
    c.objective_tol = sj.value("objective_tol", c.objective_tol);
    c.stationarity_tol = sj.value("stationarity_tol", c.stationarity_tol);
    c.wall_clock_budget_s = sj.value("wall_clock_budget_s", c.wall_clock_budget_s);
    c.eval_every = sj.value("eval_every", c.eval_every);
    c.batch_size = sj.value("batch_size", c.batch_size);
    c.beta1 = sj.value("beta1", c.beta1);
    c.beta2 = sj.value("beta2", c.beta2);
    c.eps = sj.value("eps", c.eps);
    c.variant = e.method == RunMethod::nadam ? AdamVariant::nadam : AdamVariant::adam;
  }
  return e;
}

Mat mat_from_json(const json& rows) {
  const int S = static_cast<int>(rows.size());
  if (S == 0) throw std::invalid_argument("ExperimentConfig: empty matrix");
  const int A = static_cast<int>(rows.at(0).size());
  Mat m(S, A);
  for (int s = 0; s < S; ++s) {
    const auto& row = rows.at(s);
    if (static_cast<int>(row.size()) != A)
      throw std::invalid_argument("ExperimentConfig: ragged matrix");
    for (int a = 0; a < A; ++a) m(s, a) = row.at(a).get<double>();
  }
  return m;
}

Flow flow_from_json(const json& slices) {
  Flow L;
  for (const auto& slice : slices) L.push_back(mat_from_json(slice));
  if (L.empty()) throw std::invalid_argument("ExperimentConfig: empty flow");
  return L;
}

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

// Everything a classification needs that RunOutcome does not carry.
struct RunInternal {
  RunOutcome out;
  Flow final_L;
  bool zero_initial_expl = false;
  bool has_flow = false;
};

ThetaPoint initial_theta(const GameModel& g, const ExperimentConfig& cfg,
                         std::uint64_t seed) {
  switch (cfg.init.kind) {
    case InitKind::uniform: {
      const PolicySequence pi0 = PolicySequence::uniform(g.S(), g.A(), g.T());
      return warm_start(g, propagate_flow(g, pi0));
    }
    case InitKind::warm_start_near_ne:
      return neighborhood_init(g, cfg.ne_references.at(cfg.init.ne_index),
                               cfg.init.epsilon, seed);
    case InitKind::from_checkpoint: {
      const ThetaPoint th = ThetaPoint::load(cfg.init.checkpoint_path);
      const Dims d = th.dims();
      const ThetaBounds bounds = default_bounds(d.S, d.A, d.T, g.r_max());
      return project_theta(th, bounds);  // tolerate slightly-off checkpoints
    }
  }
  throw std::logic_error("initial_theta: unreachable");
}

RunInternal execute_run(const GameModel& g, const ExperimentConfig& cfg,
                        const SolverEntry& entry, std::uint64_t seed,
                        const fs::path& dir) {
  RunInternal r;
  r.out.solver = entry.name;
  r.out.seed = seed;
  r.out.csv_path = entry.name + "_seed" + std::to_string(seed) + ".csv";
  r.out.final_f_total = r.out.final_expl = r.out.final_expl_normalized = kNaN;
  try {
    const ThetaPoint th0 = initial_theta(g, cfg, seed);
    const ThetaBounds bounds = default_bounds(g.S(), g.A(), g.T(), g.r_max());
    std::vector<IterationRecord> trace;

    if (is_baseline(entry.method)) {
      BaselineConfig bc = entry.baseline;
      bc.seed = seed;
      const PolicySequence pi0 = policy_from_occupation(th0.L);
      const BaselineResult res = run_baseline(g, pi0, bc);
      trace = res.trace;
      r.final_L = propagate_flow(g, res.pi);
      r.zero_initial_expl = res.zero_initial_expl;
    } else {
      SolverConfig sc = entry.solver;
      sc.seed = seed;
      SolveResult res;
      switch (entry.method) {
        case RunMethod::pgd: res = pgd(g, th0, bounds, sc); break;
        case RunMethod::spgd: res = spgd(g, th0, bounds, sc); break;
        case RunMethod::adam:
        case RunMethod::nadam: res = adam_solve(g, th0, bounds, sc); break;
        default: res = reparametrized_solve(g, th0, bounds, sc); break;
      }
      trace = res.trace;
      r.final_L = res.theta.L;
      r.zero_initial_expl = res.zero_initial_expl;
      if (cfg.save_checkpoints) {
        const fs::path ckpt = dir / (entry.name + "_seed" + std::to_string(seed) +
                                     "_final.json");
        res.theta.save(ckpt.string());
        // Re-validate what was written: the reloaded point must sit in the box.
        const ThetaPoint back = ThetaPoint::load(ckpt.string());
        const Vec gap = (project_theta(back, bounds).to_vector() - back.to_vector());
        if (gap.cwiseAbs().maxCoeff() > 1e-9)
          throw std::runtime_error("checkpoint failed feasibility re-validation");
      }
    }

    write_trace_csv((dir / r.out.csv_path).string(), trace, cfg.record_wall_time);
    if (!trace.empty()) {
      r.out.iters = trace.back().iter;
      r.out.final_f_total = trace.back().f_total;
      r.out.final_expl = trace.back().expl;
      r.out.final_expl_normalized = trace.back().expl_normalized;
    }
    r.has_flow = true;
    r.out.completed = true;
  } catch (const std::exception& ex) {
    r.out.completed = false;
    r.out.error = ex.what();
  }
  return r;
}

bool run_converged(const RunInternal& r, double expl_tol) {
  if (r.zero_initial_expl) return r.out.final_expl <= 1e-12;
  return r.out.final_expl_normalized <= expl_tol;
}

int nearest_reference(const Flow& L, const std::vector<Flow>& refs) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < refs.size(); ++j) {
    double d2 = 0.0;
    for (std::size_t t = 0; t < L.size(); ++t)
      d2 += (L[t] - refs[j][t]).squaredNorm();
    if (d2 < best_d) {
      best_d = d2;
      best = static_cast<int>(j);
    }
  }
  return best;
}

json outcome_to_json(const RunOutcome& o) {
  json j;
  j["solver"] = o.solver;
  j["seed"] = o.seed;
  j["csv"] = o.csv_path;
  j["completed"] = o.completed;
  if (!o.completed) j["error"] = o.error;
  j["iters"] = o.iters;
  j["final_f_total"] = o.final_f_total;
  j["final_expl"] = o.final_expl;
  j["final_expl_normalized"] = o.final_expl_normalized;
  j["assigned_ne"] = o.assigned_ne;
  return j;
}

}  // namespace

bool is_baseline(RunMethod m) {
  return m == RunMethod::fictitious_play || m == RunMethod::online_mirror_descent ||
         m == RunMethod::damped_fixed_point;
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw std::invalid_argument(std::string("ExperimentConfig: ") + ex.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.game_json = doc.at("game").dump();
    for (const auto& sj : doc.at("solvers")) cfg.solvers.push_back(parse_solver_entry(sj));
    for (const auto& s : doc.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
    cfg.output_dir = doc.at("outputs").get<std::string>();

    if (doc.contains("init")) {
      const json& ij = doc.at("init");
      const std::string kind = ij.at("kind").get<std::string>();
      if (kind == "uniform") {
        cfg.init.kind = InitKind::uniform;
      } else if (kind == "warm_start_near_ne") {
        cfg.init.kind = InitKind::warm_start_near_ne;
        cfg.init.ne_index = ij.at("ne_index").get<int>();
        cfg.init.epsilon = ij.at("epsilon").get<double>();
      } else if (kind == "from_checkpoint") {
        cfg.init.kind = InitKind::from_checkpoint;
        cfg.init.checkpoint_path = ij.at("path").get<std::string>();
      } else {
        throw std::invalid_argument("ExperimentConfig: unknown init kind '" + kind + "'");
      }
    }
    if (doc.contains("ne_references"))
      for (const auto& fj : doc.at("ne_references"))
        cfg.ne_references.push_back(flow_from_json(fj));
    if (doc.contains("classification"))
      cfg.classification.expl_tol =
          doc.at("classification").value("expl_tol", cfg.classification.expl_tol);
    if (doc.contains("timing")) {
      const std::string timing = doc.at("timing").get<std::string>();
      if (timing == "wall") cfg.record_wall_time = true;
      else if (timing == "none") cfg.record_wall_time = false;
      else throw std::invalid_argument("ExperimentConfig: timing must be wall|none");
    }
    cfg.save_checkpoints = doc.value("save_checkpoints", cfg.save_checkpoints);
    cfg.threads = doc.value("threads", cfg.threads);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("ExperimentConfig: ") + ex.what());
  }

  if (cfg.solvers.empty()) throw std::invalid_argument("ExperimentConfig: no solvers");
  if (cfg.seeds.empty()) throw std::invalid_argument("ExperimentConfig: no seeds");
  if (cfg.threads < 1) throw std::invalid_argument("ExperimentConfig: threads must be >= 1");
  if (cfg.init.epsilon < 0.0)
    throw std::invalid_argument("ExperimentConfig: epsilon must be >= 0");
  if (cfg.init.kind == InitKind::warm_start_near_ne &&
      (cfg.init.ne_index < 0 ||
       cfg.init.ne_index >= static_cast<int>(cfg.ne_references.size())))
    throw std::invalid_argument("ExperimentConfig: init ne_index out of range");
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.solvers.size(); ++j)
      if (cfg.solvers[i].name == cfg.solvers[j].name)
        throw std::invalid_argument("ExperimentConfig: duplicate solver name '" +
                                    cfg.solvers[i].name + "'");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("ExperimentConfig: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string resolve_output_dir(const std::string& output_dir) {
  fs::path p(output_dir);
  if (p.is_absolute()) return p.string();
  if (const char* root = std::getenv(kOutputRootEnvVar); root && *root)
    return (fs::path(root) / p).string();
  return p.string();
}

ThetaPoint neighborhood_init(const GameModel& g, const Flow& ne_flow, double epsilon,
                             std::uint64_t seed) {
  if (epsilon < 0.0) throw std::invalid_argument("neighborhood_init: epsilon < 0");
  Flow L = ne_flow;
  if (epsilon > 0.0) {
    Rng rng(seed);
    for (auto& slice : L) {
      Mat noise(slice.rows(), slice.cols());
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = uniform_pm1(rng);
      const double l1 = noise.cwiseAbs().sum();
      if (l1 > 0.0) slice += (epsilon * uniform_01(rng) / l1) * noise;
      slice = vec_to_mat(project_simplex(mat_to_vec(slice), 1.0),
                         static_cast<int>(slice.rows()), static_cast<int>(slice.cols()));
    }
  }
  return warm_start(g, L);
}

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace,
                     bool record_wall_time) {
  std::string out =
      "iter,time_s,f_total,f_consistency,f_bellman,f_complementarity,"
      "grad_map_norm,expl,expl_normalized\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iter);
    out += ',';
    append_g17(out, record_wall_time ? r.time_s : 0.0);
    out += ',';
    append_g17(out, r.f_total);
    out += ',';
    append_g17(out, r.f_consistency);
    out += ',';
    append_g17(out, r.f_bellman);
    out += ',';
    append_g17(out, r.f_complementarity);
    out += ',';
    append_g17(out, r.grad_map_norm);
    out += ',';
    append_g17(out, r.expl);
    out += ',';
    append_g17(out, r.expl_normalized);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
  f << out;
  if (!f) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  const std::unique_ptr<GameModel> g = game_from_json_text(cfg.game_json);
  for (const auto& ref : cfg.ne_references) {
    if (static_cast<int>(ref.size()) != g->T() + 1 || ref[0].rows() != g->S() ||
        ref[0].cols() != g->A())
      throw std::invalid_argument("run_experiment: reference flow shape mismatch");
  }
  const fs::path dir(resolve_output_dir(cfg.output_dir));
  fs::create_directories(dir);

  const std::size_t n_runs = cfg.solvers.size() * cfg.seeds.size();
  std::vector<RunInternal> results(n_runs);
  auto run_index = [&](std::size_t i) {
    const SolverEntry& entry = cfg.solvers[i / cfg.seeds.size()];
    const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
    results[i] = execute_run(*g, cfg, entry, seed, dir);
  };

  if (cfg.threads <= 1 || n_runs <= 1) {
    for (std::size_t i = 0; i < n_runs; ++i) run_index(i);
  } else {
    std::atomic<std::size_t> next{0};
    const int n_workers = std::min<int>(cfg.threads, static_cast<int>(n_runs));
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w)
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < n_runs; i = next.fetch_add(1))
          run_index(i);
      });
    for (auto& th : pool) th.join();
  }

  ExperimentSummary summary;
  summary.all_completed = true;
  int n_classified = 0, n_missed = 0;
  std::vector<int> counts(cfg.ne_references.size(), 0);
  for (auto& r : results) {
    summary.all_completed = summary.all_completed && r.out.completed;
    if (r.out.completed && !cfg.ne_references.empty() && r.has_flow) {
      ++n_classified;
      if (run_converged(r, cfg.classification.expl_tol)) {
        r.out.assigned_ne = nearest_reference(r.final_L, cfg.ne_references);
        ++counts[r.out.assigned_ne];
      } else {
        ++n_missed;
      }
    }
    summary.runs.push_back(r.out);
  }

  json sj;
  sj["all_completed"] = summary.all_completed;
  sj["n_runs"] = n_runs;
  json runs = json::array();
  for (const auto& o : summary.runs) runs.push_back(outcome_to_json(o));
  sj["runs"] = runs;
  if (!cfg.ne_references.empty()) {
    summary.p.assign(cfg.ne_references.size(), 0.0);
    summary.p0 = n_classified > 0 ? static_cast<double>(n_missed) / n_classified : 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j)
      summary.p[j] = n_classified > 0 ? static_cast<double>(counts[j]) / n_classified : 0.0;
    json cj;
    cj["expl_tol"] = cfg.classification.expl_tol;
    cj["n_classified"] = n_classified;
    cj["p0"] = summary.p0;
    cj["p"] = summary.p;
    sj["classification"] = cj;
  }

  const fs::path spath = dir / "summary.json";
  std::ofstream f(spath, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("run_experiment: cannot open " + spath.string());
  f << sj.dump(2) << '\n';
  summary.summary_path = spath.string();
  return summary;
}

}  // namespace mfomo
