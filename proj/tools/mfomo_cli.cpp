// Command-line front end.
//
//   mfomo run <config.json>            run an experiment matrix, emit CSV + summary
//   mfomo verify <checkpoint.json> --game <game.json>
//                                      check a saved point against a game
//   mfomo enumerate-lcp <config.json>  enumerate equilibrium supports exhaustively
//
// `run` exits 0 only when every (solver, seed) run completed; `verify` exits 0
// only when the checkpoint passes the equilibrium check.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mfomo/experiment.hpp"
#include "mfomo/lcp.hpp"
#include "mfomo/mfomo.hpp"

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path) {
  const mfomo::ExperimentConfig cfg = mfomo::ExperimentConfig::from_file(config_path);
  const mfomo::ExperimentSummary summary = mfomo::run_experiment(cfg);
  for (const auto& run : summary.runs) {
    if (run.completed)
      std::printf("%-24s seed %-6llu  iters %-6d  expl %.3e  -> %s\n", run.solver.c_str(),
                  static_cast<unsigned long long>(run.seed), run.iters, run.final_expl,
                  run.csv_path.c_str());
    else
      std::printf("%-24s seed %-6llu  FAILED: %s\n", run.solver.c_str(),
                  static_cast<unsigned long long>(run.seed), run.error.c_str());
  }
  if (!summary.p.empty() || summary.p0 > 0.0) {
    std::printf("missed tolerance: %.3f\n", summary.p0);
    for (std::size_t j = 0; j < summary.p.size(); ++j)
      std::printf("reached reference %zu: %.3f\n", j, summary.p[j]);
  }
  std::printf("summary: %s\n", summary.summary_path.c_str());
  return summary.all_completed ? 0 : 1;
}

int cmd_verify(const std::string& checkpoint_path, const std::string& game_path,
               double tol, bool renormalize) {
  const auto g = mfomo::game_from_json_file(game_path, renormalize);
  const mfomo::ThetaPoint th = mfomo::ThetaPoint::load(checkpoint_path);
  const mfomo::PolicySequence pi = mfomo::policy_from_occupation(th.L);
  const mfomo::ObjectiveBreakdown f = mfomo::objective(*g, th);
  const mfomo::NashReport report = mfomo::verify_nash(*g, pi, th.L, tol);
  std::printf("objective        %.17g\n", f.total);
  std::printf("  consistency    %.17g\n", f.consistency);
  std::printf("  optimality     %.17g\n", f.bellman);
  std::printf("  complementarity %.17g\n", f.complementarity);
  std::printf("flow residual    %.17g\n", report.consistency_residual);
  std::printf("optimality gap   %.17g\n", report.optimality_gap);
  std::printf("equilibrium      %s (tol %.3e)\n", report.is_nash ? "yes" : "NO", tol);
  return report.is_nash ? 0 : 1;
}

int cmd_enumerate(const std::string& config_path) {
  const json doc = json::parse(read_file(config_path));
  const auto g = mfomo::game_from_json_text(doc.at("game").dump());
  mfomo::EnumerationOptions opts;
  if (doc.contains("options")) {
    const json& oj = doc.at("options");
    opts.max_dim = oj.value("max_dim", opts.max_dim);
    opts.residual_tol = oj.value("residual_tol", opts.residual_tol);
    opts.dedupe_tol = oj.value("dedupe_tol", opts.dedupe_tol);
    opts.nash_tol = oj.value("nash_tol", opts.nash_tol);
  }
  const mfomo::EnumerationResult res = mfomo::solve_by_enumeration(*g, opts);
  std::printf("supports examined %lld, pruned %lld, solutions %zu\n",
              static_cast<long long>(res.supports_examined),
              static_cast<long long>(res.pruned), res.solutions.size());
  json out = json::array();
  for (std::size_t i = 0; i < res.solutions.size(); ++i) {
    const auto& sol = res.solutions[i];
    json entry;
    entry["theta"] = json::parse(sol.theta.to_json());
    entry["support"] = sol.support;
    entry["report"] = {{"consistency_residual", sol.report.consistency_residual},
                       {"optimality_gap", sol.report.optimality_gap},
                       {"is_nash", sol.report.is_nash}};
    out.push_back(entry);
    std::printf("  solution %zu: gap %.3e, residual %.3e\n", i, sol.report.optimality_gap,
                sol.report.consistency_residual);
  }
  if (doc.contains("output")) {
    const std::string path =
        mfomo::resolve_output_dir(doc.at("output").get<std::string>());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << out.dump(2) << '\n';
    std::printf("solutions written to %s\n", path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field game solver toolkit"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_config, "experiment JSON config")->required();

  std::string ckpt_path, game_path;
  double tol = 1e-8;
  bool renormalize = false;
  CLI::App* verify = app.add_subcommand("verify", "verify a saved checkpoint");
  verify->add_option("checkpoint", ckpt_path, "checkpoint JSON")->required();
  verify->add_option("--game", game_path, "game JSON")->required();
  verify->add_option("--tol", tol, "equilibrium tolerance");
  verify->add_flag("--renormalize", renormalize, "rescale slightly-off distributions");

  std::string enum_config;
  CLI::App* enumerate = app.add_subcommand("enumerate-lcp", "enumerate all equilibria");
  enumerate->add_option("config", enum_config, "enumeration JSON config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_config);
    if (verify->parsed()) return cmd_verify(ckpt_path, game_path, tol, renormalize);
    if (enumerate->parsed()) return cmd_enumerate(enum_config);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}
