#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfomo/experiment.hpp"
#include "mfomo/mfomo.hpp"
#include "mfomo/projections.hpp"
#include "support/fixtures.hpp"

using namespace mfomo;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& leaf) {
  const fs::path p = fs::path("/tmp/mfomo_test_exp") / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// Column col (0-based) of a CSV body, skipping the header.
std::vector<double> csv_column(const std::string& text, int col) {
  std::vector<double> out;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (int c = 0; c <= col; ++c) REQUIRE(std::getline(cells, cell, ','));
    out.push_back(std::strtod(cell.c_str(), nullptr));
  }
  return out;
}

std::string bandit_config(const std::string& outputs) {
  auto g = testing::congestion_bandit();
  std::ostringstream cfg;
  cfg << "{\n"
      << "  \"game\": " << g->to_json() << ",\n"
      << "  \"solvers\": [\n"
      << "    {\"name\": \"pgd\", \"method\": \"pgd\", \"max_iters\": 40, \"eval_every\": 1},\n"
      << "    {\"name\": \"fp\", \"method\": \"fictitious_play\", \"max_iters\": 40}\n"
      << "  ],\n"
      << "  \"seeds\": [1, 2],\n"
      << "  \"init\": {\"kind\": \"uniform\"},\n"
      << "  \"outputs\": \"" << outputs << "\",\n"
      << "  \"timing\": \"none\"\n"
      << "}\n";
  return cfg.str();
}

}  // namespace

TEST_CASE("config parsing fills defaults and validates") {
  const std::string text = bandit_config("/tmp/mfomo_test_exp/parse");
  const ExperimentConfig cfg = ExperimentConfig::from_json(text);
  CHECK(cfg.solvers.size() == 2);
  CHECK(cfg.solvers[0].method == RunMethod::pgd);
  CHECK(cfg.solvers[0].solver.max_iters == 40);
  CHECK(cfg.solvers[1].method == RunMethod::fictitious_play);
  CHECK(cfg.solvers[1].baseline.max_iters == 40);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(cfg.init.kind == InitKind::uniform);
  CHECK_FALSE(cfg.record_wall_time);
  CHECK(cfg.classification.expl_tol == 1e-3);
  CHECK(cfg.threads == 1);

  CHECK_THROWS_AS(ExperimentConfig::from_json("{not json"), std::invalid_argument);
  auto broken = [&](const std::string& from, const std::string& to) {
    std::string t = text;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  CHECK_THROWS_AS(ExperimentConfig::from_json(broken("\"seeds\": [1, 2]", "\"seeds\": []")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(broken("\"method\": \"pgd\"",
                                                     "\"method\": \"sgd\"")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(broken("\"name\": \"fp\"", "\"name\": \"pgd\"")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(broken("\"timing\": \"none\"",
                                                     "\"timing\": \"cpu\"")),
                  std::invalid_argument);
  // Neighborhood init must point at an existing reference flow.
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(broken(
          "\"init\": {\"kind\": \"uniform\"}",
          "\"init\": {\"kind\": \"warm_start_near_ne\", \"ne_index\": 0, \"epsilon\": 0.1}")),
      std::invalid_argument);
}

TEST_CASE("nadam entries flip the adam variant") {
  std::string text = bandit_config("/tmp/mfomo_test_exp/variant");
  text.replace(text.find("\"name\": \"pgd\", \"method\": \"pgd\""),
               std::string("\"name\": \"pgd\", \"method\": \"pgd\"").size(),
               "\"name\": \"n\", \"method\": \"nadam\", \"step_size\": 0.05");
  const ExperimentConfig cfg = ExperimentConfig::from_json(text);
  CHECK(cfg.solvers[0].method == RunMethod::nadam);
  CHECK(cfg.solvers[0].solver.variant == AdamVariant::nadam);
  CHECK(cfg.solvers[0].solver.step_size == 0.05);
}

TEST_CASE("neighborhood init: zero noise reproduces the reference exactly") {
  auto g = testing::three_ne_linear_game();
  const Flow ref = testing::three_ne_flow(0.5);
  const ThetaPoint th = neighborhood_init(*g, ref, 0.0, 77);
  for (std::size_t t = 0; t < ref.size(); ++t)
    CHECK((th.L[t] - ref[t]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(objective(*g, th).total <= 1e-12);
}

TEST_CASE("neighborhood init: noise stays within the l1 budget and the box") {
  auto g = testing::three_ne_linear_game();
  const Flow ref = testing::three_ne_flow(1.0);
  const ThetaBounds bounds = default_bounds(g->S(), g->A(), g->T(), g->r_max());
  const double eps = 0.05;
  const double slack = 1.0 + std::sqrt(static_cast<double>(g->S() * g->A()));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ThetaPoint th = neighborhood_init(*g, ref, eps, seed);
    for (std::size_t t = 0; t < ref.size(); ++t) {
      CHECK((th.L[t] - ref[t]).cwiseAbs().sum() <= slack * eps + 1e-12);
      CHECK(th.L[t].minCoeff() >= -1e-15);
      CHECK(th.L[t].sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
    const ThetaPoint proj = project_theta(th, bounds);
    CHECK((proj.to_vector() - th.to_vector()).cwiseAbs().maxCoeff() <= 1e-9);
  }
  // Deterministic per seed, different across seeds.
  const ThetaPoint a = neighborhood_init(*g, ref, eps, 5);
  const ThetaPoint b = neighborhood_init(*g, ref, eps, 5);
  const ThetaPoint c = neighborhood_init(*g, ref, eps, 6);
  CHECK((a.to_vector() - b.to_vector()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.to_vector() - c.to_vector()).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(neighborhood_init(*g, ref, -0.1, 0), std::invalid_argument);
}

TEST_CASE("run_experiment writes the exact schema and is byte-stable") {
  const std::string dir = fresh_dir("stable");
  const ExperimentConfig cfg = ExperimentConfig::from_json(bandit_config(dir));
  const ExperimentSummary s1 = run_experiment(cfg);
  CHECK(s1.all_completed);
  REQUIRE(s1.runs.size() == 4);
  for (const auto& run : s1.runs) {
    CHECK(run.completed);
    CHECK(fs::exists(fs::path(dir) / run.csv_path));
  }

  const std::string pgd_csv = read_file(dir + "/pgd_seed1.csv");
  CHECK(pgd_csv.rfind("iter,time_s,f_total,f_consistency,f_bellman,f_complementarity,"
                      "grad_map_norm,expl,expl_normalized\n",
                      0) == 0);
  // Constant-step full-gradient descent: the objective column never rises.
  const std::vector<double> f = csv_column(pgd_csv, 2);
  REQUIRE(f.size() >= 2);
  for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] <= f[i - 1] + 1e-15);
  // Wall time suppressed: the time column is exactly zero.
  for (const double t : csv_column(pgd_csv, 1)) CHECK(t == 0.0);
  // Baseline rows carry NaN objectives.
  const std::string fp_csv = read_file(dir + "/fp_seed1.csv");
  for (const double v : csv_column(fp_csv, 2)) CHECK(std::isnan(v));
  for (const double v : csv_column(fp_csv, 7)) CHECK(v >= 0.0);

  const std::string summary1 = read_file(s1.summary_path);
  const ExperimentSummary s2 = run_experiment(cfg);
  CHECK(read_file(dir + "/pgd_seed1.csv") == pgd_csv);
  CHECK(read_file(dir + "/fp_seed1.csv") == fp_csv);
  CHECK(read_file(s2.summary_path) == summary1);
}

TEST_CASE("threaded fan-out reproduces the sequential outputs") {
  const std::string d1 = fresh_dir("seq");
  const std::string d4 = fresh_dir("par");
  run_experiment(ExperimentConfig::from_json(bandit_config(d1)));
  std::string par = bandit_config(d4);
  par.replace(par.find("\"timing\": \"none\""), std::string("\"timing\": \"none\"").size(),
              "\"timing\": \"none\",\n  \"threads\": 4");
  run_experiment(ExperimentConfig::from_json(par));
  for (const std::string leaf :
       {"pgd_seed1.csv", "pgd_seed2.csv", "fp_seed1.csv", "fp_seed2.csv", "summary.json"})
    CHECK(read_file(d1 + "/" + leaf) == read_file(d4 + "/" + leaf));
}

TEST_CASE("basin classification assigns converged runs to the seeded flow") {
  auto g = testing::three_ne_linear_game();
  const std::string dir = fresh_dir("classify");
  std::ostringstream cfg;
  auto flow_json = [](const Flow& L) {
    std::ostringstream out;
    out << "[";
    for (std::size_t t = 0; t < L.size(); ++t) {
      out << (t ? "," : "") << "[";
      for (Eigen::Index s = 0; s < L[t].rows(); ++s) {
        out << (s ? "," : "") << "[";
        for (Eigen::Index a = 0; a < L[t].cols(); ++a)
          out << (a ? "," : "") << L[t](s, a);
        out << "]";
      }
      out << "]";
    }
    out << "]";
    return out.str();
  };
  cfg << "{\n"
      << "  \"game\": " << g->to_json() << ",\n"
      << "  \"solvers\": [{\"name\": \"pgd\", \"method\": \"pgd\", \"max_iters\": 5}],\n"
      << "  \"seeds\": [1, 2, 3],\n"
      << "  \"init\": {\"kind\": \"warm_start_near_ne\", \"ne_index\": 1, \"epsilon\": 0.0},\n"
      << "  \"outputs\": \"" << dir << "\",\n"
      << "  \"timing\": \"none\",\n"
      << "  \"ne_references\": [" << flow_json(testing::three_ne_flow(0.0)) << ","
      << flow_json(testing::three_ne_flow(0.5)) << "," << flow_json(testing::three_ne_flow(1.0))
      << "]\n"
      << "}\n";
  const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(cfg.str()));
  CHECK(s.all_completed);
  // Exact equilibrium start, zero gradient: every run stays put and is
  // assigned to the middle reference.
  REQUIRE(s.p.size() == 3);
  CHECK(s.p0 == 0.0);
  CHECK(s.p[0] == 0.0);
  CHECK(s.p[1] == 1.0);
  CHECK(s.p[2] == 0.0);
  for (const auto& run : s.runs) CHECK(run.assigned_ne == 1);
  double total = s.p0;
  for (const double v : s.p) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("runs that stay above tolerance land in p0") {
  auto g = testing::congestion_bandit();
  const std::string dir = fresh_dir("missed");
  std::ostringstream cfg;
  cfg << "{\n"
      << "  \"game\": " << g->to_json() << ",\n"
      << "  \"solvers\": [{\"name\": \"pgd\", \"method\": \"pgd\", \"max_iters\": 1}],\n"
      << "  \"seeds\": [1],\n"
      << "  \"init\": {\"kind\": \"uniform\"},\n"
      << "  \"outputs\": \"" << dir << "\",\n"
      << "  \"timing\": \"none\",\n"
      << "  \"ne_references\": [[[[0.5, 0.5]]]]\n"
      << "}\n";
  const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(cfg.str()));
  CHECK(s.all_completed);
  // The uniform start of this game is its equilibrium: exploitability starts
  // at zero, the solver stays, and the run classifies as converged.
  CHECK(s.p0 == 0.0);
  CHECK(s.p[0] == 1.0);

  // A dominant-arm game seeded with the wrong reference and one iteration:
  // normalized exploitability stays near 1, so the run counts into p0.
  auto g2 = testing::dominant_bandit();
  const std::string dir2 = fresh_dir("missed2");
  std::ostringstream cfg2;
  cfg2 << "{\n"
       << "  \"game\": " << g2->to_json() << ",\n"
       << "  \"solvers\": [{\"name\": \"pgd\", \"method\": \"pgd\", \"max_iters\": 1}],\n"
       << "  \"seeds\": [1],\n"
       << "  \"init\": {\"kind\": \"uniform\"},\n"
       << "  \"outputs\": \"" << dir2 << "\",\n"
       << "  \"timing\": \"none\",\n"
       << "  \"ne_references\": [[[[1.0, 0.0]]]]\n"
       << "}\n";
  const ExperimentSummary s2 = run_experiment(ExperimentConfig::from_json(cfg2.str()));
  CHECK(s2.all_completed);
  CHECK(s2.p0 == 1.0);
  CHECK(s2.runs[0].assigned_ne == -1);
}

TEST_CASE("per-run failures are recorded, not thrown") {
  const std::string dir = fresh_dir("failures");
  std::string text = bandit_config(dir);
  text.replace(text.find("{\"kind\": \"uniform\"}"),
               std::string("{\"kind\": \"uniform\"}").size(),
               "{\"kind\": \"from_checkpoint\", \"path\": \"/nonexistent/ckpt.json\"}");
  const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(text));
  CHECK_FALSE(s.all_completed);
  REQUIRE(s.runs.size() == 4);
  for (const auto& run : s.runs) {
    CHECK_FALSE(run.completed);
    CHECK_FALSE(run.error.empty());
  }
}

TEST_CASE("relative output dirs resolve under the environment root") {
  ::setenv(kOutputRootEnvVar, "/tmp/mfomo_test_exp/root", 1);
  CHECK(resolve_output_dir("sub/dir") == "/tmp/mfomo_test_exp/root/sub/dir");
  CHECK(resolve_output_dir("/abs/path") == "/abs/path");
  ::unsetenv(kOutputRootEnvVar);
  CHECK(resolve_output_dir("sub/dir") == "sub/dir");
}

TEST_CASE("checkpoint saving re-validates what lands on disk") {
  auto g = testing::congestion_bandit();
  const std::string dir = fresh_dir("ckpt");
  std::string text = bandit_config(dir);
  text.replace(text.find("\"timing\": \"none\""), std::string("\"timing\": \"none\"").size(),
               "\"timing\": \"none\",\n  \"save_checkpoints\": true");
  const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(text));
  CHECK(s.all_completed);
  // Solver runs leave a loadable, feasible theta; baselines have none.
  CHECK(fs::exists(dir + "/pgd_seed1_final.json"));
  CHECK_FALSE(fs::exists(dir + "/fp_seed1_final.json"));
  const ThetaPoint th = ThetaPoint::load(dir + "/pgd_seed1_final.json");
  const ThetaBounds bounds = default_bounds(g->S(), g->A(), g->T(), g->r_max());
  const ThetaPoint proj = project_theta(th, bounds);
  CHECK((proj.to_vector() - th.to_vector()).cwiseAbs().maxCoeff() <= 1e-9);
}
