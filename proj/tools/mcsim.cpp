#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcs/analysis.hpp"
#include "mcs/experiment.hpp"
#include "mcs/taskset_io.hpp"

namespace fs = std::filesystem;
using namespace mcs;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInput = 3, kIo = 4, kUnschedulable = 5 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool trace = false;
  std::optional<std::uint32_t> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_flag("--trace", c.trace, "write event traces");
  cmd->add_option("--threads", c.threads, "worker threads (0: all cores)");
}

experiment::ExperimentConfig load_config(const Common& c) {
  experiment::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = experiment::ExperimentConfig::from_json(read_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-criticality budget adaptation toolkit"};
  app.set_version_flag("--version", experiment::code_version());
  app.require_subcommand(1);

  Common common;
  std::optional<std::uint32_t> runnables;
  std::optional<std::uint32_t> count;
  std::optional<double> duration;
  std::string taskset_path;
  std::string model_path;
  std::string hidden = "n/2";
  std::size_t batch = 3;
  std::vector<std::uint32_t> sweep_points;
  std::vector<std::string> result_files;
  std::string priority;

  auto* gen = app.add_subcommand("generate", "generate task sets and a manifest");
  add_common(gen, common);
  gen->add_option("--runnables", runnables, "runnables per task set");
  gen->add_option("--count", count, "number of task sets");
  gen->add_option("--priority", priority, "priority policy: dm | audsley");

  auto* sweep = app.add_subcommand("sweep", "schedulable fraction against runnable count");
  add_common(sweep, common);
  sweep->add_option("--points", sweep_points, "runnable counts")->delimiter(',');
  sweep->add_option("--sets", count, "task sets per point");

  auto* analyze = app.add_subcommand("analyze", "AMC-rtb response times of a task set");
  analyze->add_option("taskset", taskset_path)->required();

  auto* train = app.add_subcommand("train", "train one DQN model on a task set");
  add_common(train, common);
  train->add_option("taskset", taskset_path)->required();
  train->add_option("--hidden", hidden, "n/2 | n,n/2 | n,n/2,n/4");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--duration", duration, "simulated seconds");

  auto* eval = app.add_subcommand("evaluate", "simulate a task set with or without a model");
  add_common(eval, common);
  eval->add_option("taskset", taskset_path)->required();
  eval->add_option("--model", model_path, "checkpoint; omit for the baseline");
  eval->add_option("--duration", duration, "simulated seconds");

  auto* compare = app.add_subcommand("compare", "ratio report from evaluation results");
  add_common(compare, common);
  compare->add_option("results", result_files)->required();

  auto* run = app.add_subcommand("run", "generate, train the grid, evaluate and compare");
  add_common(run, common);
  run->add_option("--runnables", runnables, "runnables per task set");
  run->add_option("--count", count, "number of task sets");
  run->add_option("--train-duration", duration, "simulated training seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_config(common);
    if (runnables) cfg.generator.num_runnables = *runnables;
    if (!priority.empty()) cfg.generator.priority_policy = analysis::parse_priority_policy(priority);
    const fs::path out = common.out_dir;

    if (*gen) {
      if (count) cfg.num_tasksets = *count;
      const auto sets = experiment::cmd_generate(cfg, out.string());
      std::size_t ok = 0;
      for (const auto& s : sets) ok += s.schedulable ? 1 : 0;
      std::cout << "wrote " << sets.size() << " task sets (" << ok << " AMC-rtb schedulable) to " << out << "\n";
    } else if (*sweep) {
      if (!sweep_points.empty()) cfg.sweep_runnables = sweep_points;
      if (count) cfg.sets_per_point = *count;
      const auto table = experiment::sweep_table(experiment::cmd_sweep(cfg));
      write_file(out / "sweep.csv", table);
      std::cout << table;
    } else if (*analyze) {
      const TaskSet ts = load_taskset(taskset_path);
      const auto result = analysis::amc_rtb_test(ts);
      std::cout << analysis::analysis_report(ts, result);
      if (!result.schedulable) return kUnschedulable;
    } else if (*train) {
      if (duration) cfg.train_duration_s = *duration;
      const TaskSet ts = load_taskset(taskset_path);
      const experiment::GridPoint point{dqn::parse_hidden_shape(hidden), batch};
      auto result = experiment::train(ts, cfg, point, cfg.seed);
      fs::create_directories(out);
      agent::save_checkpoint_file((out / "model.ckpt").string(), result.agent);
      write_file(out / "train_log.csv", experiment::training_log_csv(result.agent.log()));
      write_file(out / "train_metrics.json", sim::metrics_to_json(result.metrics) + "\n");
      std::cout << "trained " << point.label() << " for " << cfg.train_duration_s << " s: "
                << result.agent.activations() << " activations, " << result.agent.trainer().train_steps()
                << " train steps\n";
    } else if (*eval) {
      if (duration) cfg.eval_duration_s = *duration;
      const TaskSet ts = load_taskset(taskset_path);
      std::optional<agent::DqnAgent> model;
      if (!model_path.empty()) model = agent::load_checkpoint_file(model_path, ts, cfg.seed);
      auto sc = experiment::sim_config(cfg, cfg.eval_duration_s, cfg.seed);
      sc.trace = common.trace;
      experiment::Evaluation e;
      e.model = model ? fs::path(model_path).stem().string() : "baseline";
      if (model) {
        model->set_training(false);
        model->begin_episode();
      }
      auto result = sim::run(ts, sc, model ? &*model : nullptr);
      e.metrics = result.metrics;
      e.total_reward = model ? model->total_reward() : 0.0;
      const std::string name = fs::path(taskset_path).stem().string();
      const std::string stem = name + "_" + (model ? e.model : "baseline");
      write_file(out / (stem + ".eval.json"), experiment::evaluation_to_json(e, name, cfg.seed, cfg));
      if (common.trace) {
        std::ostringstream os;
        sim::write_trace(os, result.trace);
        write_file(out / (stem + ".trace"), os.str());
      }
      std::cout << sim::metrics_to_json(e.metrics) << "\n";
    } else if (*compare) {
      std::vector<std::pair<std::string, experiment::Evaluation>> results;
      for (const auto& f : result_files) results.push_back(experiment::evaluation_from_json(read_file(f)));
      const auto report = experiment::cmd_compare(results);
      write_file(out / "report.json", experiment::report_json(report, cfg));
      write_file(out / "report.txt", experiment::report_text(report));
      std::cout << experiment::report_text(report);
    } else if (*run) {
      if (count) cfg.num_tasksets = *count;
      if (duration) cfg.train_duration_s = *duration;
      const auto result = experiment::run_pipeline(cfg, out.string());
      std::cout << experiment::report_text(result.report);
    }
    return kOk;
  } catch (const experiment::UnschedulableTaskSet& e) {
    std::cerr << "error[unschedulable]: " << e.what() << "\n";
    return kUnschedulable;
  } catch (const IoError& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return kIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return kIo;
  } catch (const InvariantViolation& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kInput;
  } catch (const agent::CheckpointError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kFailure;
  }
}
