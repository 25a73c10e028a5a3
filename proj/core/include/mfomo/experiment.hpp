#pragma once

// Config-driven experiment runner: one game, a matrix of solver/baseline
// entries crossed with seeds, one CSV trace per run plus a JSON summary with
// optional equilibrium-basin statistics.
//
// CSV columns, in order:
//   iter, time_s, f_total, f_consistency, f_bellman, f_complementarity,
//   grad_map_norm, expl, expl_normalized
// Values are printed with 17 significant digits so doubles round-trip
// exactly; baseline rows carry NaN in the objective columns.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mfomo/baselines.hpp"
#include "mfomo/game.hpp"
#include "mfomo/solvers.hpp"

namespace mfomo {

enum class InitKind { uniform, warm_start_near_ne, from_checkpoint };

struct InitSpec {
  InitKind kind = InitKind::uniform;
  int ne_index = 0;             // warm_start_near_ne: which reference flow
  double epsilon = 0.0;         // warm_start_near_ne: noise budget, >= 0
  std::string checkpoint_path;  // from_checkpoint
};

enum class RunMethod {
  pgd,
  spgd,
  adam,
  nadam,
  reparametrized,
  fictitious_play,
  online_mirror_descent,
  damped_fixed_point,
};

// True for the three best-response schemes, which iterate in policy space
// and carry no theta.
bool is_baseline(RunMethod m);

struct SolverEntry {
  std::string name;  // unique label; used as the CSV file stem
  RunMethod method = RunMethod::pgd;
  SolverConfig solver;      // optimizer methods
  BaselineConfig baseline;  // baseline methods
};

struct ClassificationSpec {
  // A run counts as converged when its final normalized exploitability is
  // at or below this threshold; converged runs are assigned to the nearest
  // reference flow in stacked l2 distance.
  double expl_tol = 1e-3;
};

struct ExperimentConfig {
  std::string game_json;  // document for game_from_json_text
  std::vector<SolverEntry> solvers;
  std::vector<std::uint64_t> seeds;
  InitSpec init;
  std::string output_dir;  // relative paths resolve under the env output root
  std::vector<Flow> ne_references;
  ClassificationSpec classification;
  bool record_wall_time = true;  // false: time_s column written as 0 exactly
  bool save_checkpoints = false; // write <name>_seed<seed>_final.json thetas
  int threads = 1;               // fan-out across (solver, seed) pairs

  // Parses the JSON document described in the README; throws
  // std::invalid_argument on malformed or inconsistent input.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

// Environment variable consulted for relative output directories.
inline constexpr const char* kOutputRootEnvVar = "MFOMO_OUTPUT_ROOT";

// cfg.output_dir resolved against $MFOMO_OUTPUT_ROOT (when set and the path
// is relative); absolute paths pass through.
std::string resolve_output_dir(const std::string& output_dir);

struct RunOutcome {
  std::string solver;
  std::uint64_t seed = 0;
  std::string csv_path;        // relative to the output directory
  bool completed = false;
  std::string error;           // populated when !completed
  int iters = 0;
  double final_f_total = 0.0;  // NaN for baselines
  double final_expl = 0.0;
  double final_expl_normalized = 0.0;  // NaN when the start was already optimal
  int assigned_ne = -1;  // nearest reference when converged; -1 otherwise
};

struct ExperimentSummary {
  bool all_completed = false;
  std::vector<RunOutcome> runs;
  // Per-reference assignment proportions over completed runs; p0 is the
  // not-converged fraction.  p0 + sum(p) = 1.  Empty without references.
  std::vector<double> p;
  double p0 = 0.0;
  std::string summary_path;
};

// Runs every (solver, seed) pair, writes the CSVs plus summary.json under the
// resolved output directory and returns the aggregate.  Per-run failures are
// recorded in the outcome (completed = false), not thrown; all_completed
// reflects them.  With record_wall_time = false the outputs are
// byte-identical across reruns.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

// Warm start in an epsilon-neighborhood of a reference flow: each slice of
// the flow gets additive uniform noise scaled to l1 magnitude <= epsilon,
// is projected back to the simplex, and the multiplier/slack blocks are
// rebuilt by warm_start.  epsilon = 0 reproduces the reference exactly.
ThetaPoint neighborhood_init(const GameModel& g, const Flow& ne_flow, double epsilon,
                             std::uint64_t seed);

// Writes one trace in the experiment CSV schema.  Exposed for the CLI and
// tests; run_experiment uses it internally.
void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace,
                     bool record_wall_time);

}  // namespace mfomo
