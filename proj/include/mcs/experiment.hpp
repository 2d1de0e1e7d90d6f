#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcs/agent.hpp"
#include "mcs/dqn.hpp"
#include "mcs/sim.hpp"
#include "mcs/workload.hpp"

// Experiment pipeline: task-set generation, schedulability sweeps, grid
// training, paired evaluation and ratio reports.
namespace mcs::experiment {

struct GridPoint {
  dqn::HiddenShape hidden = dqn::HiddenShape::Half;
  std::size_t batch_size = 3;
  std::string label() const;
};

// 3 layer shapes x batch sizes {3, 6, 12}.
std::vector<GridPoint> default_grid();

struct ExperimentConfig {
  workload::GeneratorConfig generator;
  std::uint32_t num_tasksets = 100;
  double train_duration_s = 100.0;
  double eval_duration_s = 1000.0;
  std::vector<GridPoint> grid = default_grid();
  std::uint64_t seed = 1;
  bool eq5_check = true;
  bool affected_only_scope = false;
  dqn::Hyperparameters hp;  // grid fields are overridden per point
  std::vector<std::uint32_t> sweep_runnables;  // empty: 20..500 step 30
  std::uint32_t sets_per_point = 10;
  std::uint32_t threads = 0;  // 0: hardware concurrency

  void check() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  // fnv1a of the canonical JSON; changes with any field.
  std::uint64_t hash() const;
};

std::string code_version();

// Seeds of the index-th task set and of its training/evaluation streams.
std::uint64_t taskset_seed(const ExperimentConfig& cfg, std::uint32_t index);
std::uint64_t train_seed(const ExperimentConfig& cfg, std::uint64_t set_seed, std::size_t grid_index);
std::uint64_t eval_seed(const ExperimentConfig& cfg, std::uint64_t set_seed);

sim::SimConfig sim_config(const ExperimentConfig& cfg, double duration_s, std::uint64_t seed);

// --- generate --------------------------------------------------------------

struct GeneratedSet {
  std::uint32_t index = 0;
  std::uint64_t seed = 0;
  std::string file;
  std::size_t tasks = 0;
  bool schedulable = false;
};

// Writes taskset_NNN.json per set plus manifest.json into out_dir.
std::vector<GeneratedSet> cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir);

// --- sweep -----------------------------------------------------------------

struct SweepPoint {
  std::uint32_t runnables = 0;
  std::uint32_t sets = 0;
  std::uint32_t schedulable = 0;
  double fraction() const { return sets ? static_cast<double>(schedulable) / sets : 0.0; }
};

std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& cfg);
std::string sweep_table(const std::vector<SweepPoint>& points);  // CSV

// --- train / evaluate ------------------------------------------------------

class UnschedulableTaskSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  agent::DqnAgent agent;
  sim::Metrics metrics;
};

// Trains one model for train_duration_s; throws UnschedulableTaskSet.
TrainResult train(const TaskSet& ts, const ExperimentConfig& cfg, const GridPoint& point, std::uint64_t seed);

std::string training_log_csv(const std::vector<agent::ActivationRecord>& log);

struct Evaluation {
  std::string model;  // "baseline" without an agent
  sim::Metrics metrics;
  double total_reward = 0.0;
};

// Greedy evaluation for eval_duration_s. Without an agent the agent task is
// omitted entirely.
Evaluation evaluate(const TaskSet& ts, const ExperimentConfig& cfg, agent::DqnAgent* agent, std::uint64_t seed);

std::string evaluation_to_json(const Evaluation& e, const std::string& taskset, std::uint64_t seed,
                               const ExperimentConfig& cfg);
// Returns (taskset name, evaluation).
std::pair<std::string, Evaluation> evaluation_from_json(const std::string& text);

// --- compare ---------------------------------------------------------------

struct Ratio {
  enum class Kind { Finite, Infinite, Undefined };
  Kind kind = Kind::Undefined;
  double value = 0.0;
  std::string str() const;
};

// baseline / agent; x/0 is infinite, 0/0 undefined.
Ratio ratio(std::uint64_t baseline, std::uint64_t agent);

struct QuantileSummary {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
  std::size_t finite = 0;
  std::size_t infinite = 0;
  std::size_t undefined = 0;
};

// Linear interpolation between order statistics; non-finite ratios are
// counted and excluded.
QuantileSummary summarize(const std::vector<Ratio>& ratios);

struct SetComparison {
  std::string taskset;
  Evaluation baseline;
  Evaluation best;
  Ratio mode_changes;
  Ratio lo_kills;
};

struct ComparisonReport {
  std::vector<SetComparison> sets;
  QuantileSummary mode_changes;
  QuantileSummary lo_kills;
};

// Best model per set: highest total reward, ties by fewer mode changes.
const Evaluation& best_of(const std::vector<Evaluation>& models);

// `results` pairs a task-set name with an evaluation; each set needs exactly
// one baseline and at least one model.
ComparisonReport cmd_compare(const std::vector<std::pair<std::string, Evaluation>>& results);

std::string report_json(const ComparisonReport& report, const ExperimentConfig& cfg);
std::string report_text(const ComparisonReport& report);

// --- full pipeline -----------------------------------------------------------

struct PipelineResult {
  ComparisonReport report;
  std::vector<std::uint64_t> skipped_seeds;  // unschedulable candidates
  std::vector<std::pair<std::string, Evaluation>> evaluations;
};

// Generates num_tasksets schedulable sets, trains every grid point on each,
// evaluates baseline and models with paired seeds, and compares.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir = "");

}  // namespace mcs::experiment
