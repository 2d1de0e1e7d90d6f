#include "mcs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mcs/analysis.hpp"
#include "mcs/taskset_io.hpp"

namespace mcs::experiment {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string GridPoint::label() const { return "[" + dqn::to_string(hidden) + "]/b" + std::to_string(batch_size); }

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (auto h : {dqn::HiddenShape::Half, dqn::HiddenShape::FullHalf, dqn::HiddenShape::FullHalfQuarter}) {
    for (std::size_t b : {3, 6, 12}) grid.push_back({h, b});
  }
  return grid;
}

std::string code_version() { return MCS_VERSION; }

void ExperimentConfig::check() const {
  generator.check();
  if (!(train_duration_s > 0.0) || !(eval_duration_s > 0.0)) throw std::invalid_argument("durations must be positive");
  if (grid.empty()) throw std::invalid_argument("hyperparameter grid is empty");
  if (num_tasksets == 0) throw std::invalid_argument("num_tasksets must be positive");
  if (sets_per_point == 0) throw std::invalid_argument("sets_per_point must be positive");
  for (const auto& g : grid) {
    auto hp_point = hp;
    hp_point.batch_size = g.batch_size;
    hp_point.check();
  }
}

namespace {

std::string policy_name(analysis::PriorityPolicy p) {
  return p == analysis::PriorityPolicy::Audsley ? "audsley" : "dm";
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["format"] = "mcs-experiment";
  j["version"] = 1;
  j["generator"] = {{"num_runnables", c.generator.num_runnables},
                    {"criticality_split", c.generator.criticality_split},
                    {"quantile_samples", c.generator.quantile_samples},
                    {"priority_policy", policy_name(c.generator.priority_policy)},
                    {"uunifast_retry_cap", c.generator.uunifast_retry_cap},
                    {"bounded_fallback", c.generator.bounded_fallback}};
  j["num_tasksets"] = c.num_tasksets;
  j["train_duration_s"] = c.train_duration_s;
  j["eval_duration_s"] = c.eval_duration_s;
  ordered_json grid = ordered_json::array();
  for (const auto& g : c.grid) grid.push_back({{"hidden", dqn::to_string(g.hidden)}, {"batch_size", g.batch_size}});
  j["grid"] = grid;
  j["seed"] = c.seed;
  j["eq5_check"] = c.eq5_check;
  j["validation_scope"] = c.affected_only_scope ? "affected-only" : "all";
  j["dqn"] = {{"max_memory", c.hp.max_memory},
              {"min_memory", c.hp.min_memory},
              {"gamma", c.hp.gamma},
              {"target_update_frequency", c.hp.target_update_frequency},
              {"learning_rate", c.hp.learning_rate},
              {"adam_beta1", c.hp.adam_beta1},
              {"adam_beta2", c.hp.adam_beta2},
              {"adam_epsilon", c.hp.adam_epsilon},
              {"epsilon_start", c.hp.exploration.start},
              {"epsilon_end", c.hp.exploration.end},
              {"epsilon_decay", c.hp.exploration.decay},
              {"train_steps_per_activation", c.hp.train_steps_per_activation},
              {"learn_from_rejected", c.hp.learn_from_rejected}};
  j["sweep_runnables"] = c.sweep_runnables;
  j["sets_per_point"] = c.sets_per_point;
  return j;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SimTime seconds(double s) { return SimTime{static_cast<SimTime::rep>(std::llround(s * SimTime::kTicksPerSecond))}; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

unsigned worker_count(const ExperimentConfig& cfg) {
  unsigned t = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  return std::max(1u, t);
}

// Runs job(i) for i in [0, count) on a small pool; results are written by
// index so the order of completion does not matter.
template <typename Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(threads, count); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

nlohmann::json metrics_json(const sim::Metrics& m) { return nlohmann::json::parse(sim::metrics_to_json(m)); }

}  // namespace

std::string ExperimentConfig::to_json() const { return config_json(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string{"mcs-experiment"}) != "mcs-experiment") {
    throw std::invalid_argument("not an experiment config");
  }
  ExperimentConfig c;
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    read_opt(g, "num_runnables", c.generator.num_runnables);
    read_opt(g, "criticality_split", c.generator.criticality_split);
    read_opt(g, "quantile_samples", c.generator.quantile_samples);
    read_opt(g, "uunifast_retry_cap", c.generator.uunifast_retry_cap);
    read_opt(g, "bounded_fallback", c.generator.bounded_fallback);
    if (g.contains("priority_policy")) {
      c.generator.priority_policy = analysis::parse_priority_policy(g.at("priority_policy").get<std::string>());
    }
  }
  read_opt(j, "num_tasksets", c.num_tasksets);
  read_opt(j, "train_duration_s", c.train_duration_s);
  read_opt(j, "eval_duration_s", c.eval_duration_s);
  if (j.contains("grid")) {
    c.grid.clear();
    for (const auto& g : j.at("grid")) {
      c.grid.push_back({dqn::parse_hidden_shape(g.at("hidden").get<std::string>()), g.at("batch_size").get<std::size_t>()});
    }
  }
  read_opt(j, "seed", c.seed);
  read_opt(j, "eq5_check", c.eq5_check);
  if (j.contains("validation_scope")) {
    const auto scope = j.at("validation_scope").get<std::string>();
    if (scope != "all" && scope != "affected-only") throw std::invalid_argument("unknown validation scope '" + scope + "'");
    c.affected_only_scope = scope == "affected-only";
  }
  if (j.contains("dqn")) {
    const auto& d = j.at("dqn");
    read_opt(d, "max_memory", c.hp.max_memory);
    read_opt(d, "min_memory", c.hp.min_memory);
    read_opt(d, "gamma", c.hp.gamma);
    read_opt(d, "target_update_frequency", c.hp.target_update_frequency);
    read_opt(d, "learning_rate", c.hp.learning_rate);
    read_opt(d, "adam_beta1", c.hp.adam_beta1);
    read_opt(d, "adam_beta2", c.hp.adam_beta2);
    read_opt(d, "adam_epsilon", c.hp.adam_epsilon);
    read_opt(d, "epsilon_start", c.hp.exploration.start);
    read_opt(d, "epsilon_end", c.hp.exploration.end);
    read_opt(d, "epsilon_decay", c.hp.exploration.decay);
    read_opt(d, "train_steps_per_activation", c.hp.train_steps_per_activation);
    read_opt(d, "learn_from_rejected", c.hp.learn_from_rejected);
  }
  read_opt(j, "sweep_runnables", c.sweep_runnables);
  read_opt(j, "sets_per_point", c.sets_per_point);
  c.check();
  return c;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(config_json(*this).dump()); }

std::uint64_t taskset_seed(const ExperimentConfig& cfg, std::uint32_t index) {
  return derive_seed(cfg.seed, "taskset-" + std::to_string(cfg.generator.num_runnables), index);
}

std::uint64_t train_seed(const ExperimentConfig& cfg, std::uint64_t set_seed, std::size_t grid_index) {
  return derive_seed(cfg.seed ^ set_seed, "train", grid_index);
}

std::uint64_t eval_seed(const ExperimentConfig& cfg, std::uint64_t set_seed) {
  return derive_seed(cfg.seed ^ set_seed, "eval");
}

sim::SimConfig sim_config(const ExperimentConfig& cfg, double duration_s, std::uint64_t seed) {
  sim::SimConfig sc;
  sc.duration = seconds(duration_s);
  sc.seed = seed;
  sc.validation.check_lo_tasks = cfg.eq5_check;
  sc.affected_only_scope = cfg.affected_only_scope;
  return sc;
}

// --- generate ----------------------------------------------------------------

std::vector<GeneratedSet> cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.check();
  fs::create_directories(out_dir);
  std::vector<GeneratedSet> sets(cfg.num_tasksets);
  parallel_for(sets.size(), worker_count(cfg), [&](std::size_t k) {
    auto& s = sets[k];
    s.index = static_cast<std::uint32_t>(k);
    s.seed = taskset_seed(cfg, s.index);
    auto gen = cfg.generator;
    gen.seed = s.seed;
    const TaskSet ts = workload::generate_taskset(gen);
    std::ostringstream name;
    name << "taskset_" << std::setw(3) << std::setfill('0') << k << ".json";
    s.file = name.str();
    s.tasks = ts.size();
    s.schedulable = analysis::amc_rtb_test(ts).schedulable;
    try {
      write_file(fs::path(out_dir) / s.file, serialize_taskset(ts));
    } catch (const std::exception& e) {
      throw std::runtime_error("task set " + std::to_string(k) + ": " + e.what());
    }
  });
  ordered_json manifest;
  manifest["format"] = "mcs-manifest";
  manifest["version"] = 1;
  manifest["config_hash"] = hex(cfg.hash());
  manifest["code_version"] = code_version();
  manifest["config"] = config_json(cfg);
  ordered_json list = ordered_json::array();
  for (const auto& s : sets) {
    list.push_back({{"file", s.file}, {"seed", s.seed}, {"tasks", s.tasks}, {"schedulable", s.schedulable}});
  }
  manifest["tasksets"] = list;
  write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  return sets;
}

// --- sweep -------------------------------------------------------------------

std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& cfg) {
  cfg.check();
  std::vector<std::uint32_t> counts = cfg.sweep_runnables;
  if (counts.empty()) {
    for (std::uint32_t r = 20; r <= 500; r += 30) counts.push_back(r);
  }
  const std::size_t per = cfg.sets_per_point;
  std::vector<char> ok(counts.size() * per, 0);
  parallel_for(ok.size(), worker_count(cfg), [&](std::size_t job) {
    auto gen = cfg.generator;
    gen.num_runnables = counts[job / per];
    gen.seed = derive_seed(cfg.seed, "sweep-" + std::to_string(gen.num_runnables), job % per);
    ok[job] = analysis::amc_rtb_test(workload::generate_taskset(gen)).schedulable ? 1 : 0;
  });
  std::vector<SweepPoint> points;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    SweepPoint p{counts[c], static_cast<std::uint32_t>(per), 0};
    for (std::size_t k = 0; k < per; ++k) p.schedulable += ok[c * per + k];
    points.push_back(p);
  }
  return points;
}

std::string sweep_table(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "runnables,sets,schedulable,fraction\n";
  for (const auto& p : points) os << p.runnables << ',' << p.sets << ',' << p.schedulable << ',' << p.fraction() << '\n';
  return os.str();
}

// --- train / evaluate --------------------------------------------------------

TrainResult train(const TaskSet& ts, const ExperimentConfig& cfg, const GridPoint& point, std::uint64_t seed) {
  if (!analysis::amc_rtb_test(ts).schedulable) throw UnschedulableTaskSet("task set is not AMC-rtb schedulable");
  auto hp = cfg.hp;
  hp.hidden = point.hidden;
  hp.batch_size = point.batch_size;
  agent::DqnAgent agent(ts, hp, seed);
  agent.set_training(true);
  const auto sc = sim_config(cfg, cfg.train_duration_s, derive_seed(seed, "train-workload"));
  auto run = sim::run(ts, sc, &agent);
  return TrainResult{std::move(agent), run.metrics};
}

std::string training_log_csv(const std::vector<agent::ActivationRecord>& log) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "activation,time_ticks,epsilon,reward,loss,action,rejected,rejected_total\n";
  std::uint64_t rejected = 0;
  for (const auto& r : log) {
    rejected += r.rejected ? 1 : 0;
    os << r.activation << ',' << r.time.ticks() << ',' << r.epsilon << ',' << r.reward << ',';
    if (r.loss) os << *r.loss;
    os << ',' << r.action << ',' << (r.rejected ? 1 : 0) << ',' << rejected << '\n';
  }
  return os.str();
}

Evaluation evaluate(const TaskSet& ts, const ExperimentConfig& cfg, agent::DqnAgent* agent, std::uint64_t seed) {
  const auto sc = sim_config(cfg, cfg.eval_duration_s, seed);
  Evaluation e;
  e.model = "baseline";
  if (agent) {
    agent->set_training(false);
    agent->begin_episode();
    e.metrics = sim::run(ts, sc, agent).metrics;
    e.total_reward = agent->total_reward();
  } else {
    e.metrics = sim::run(ts, sc).metrics;
  }
  return e;
}

std::string evaluation_to_json(const Evaluation& e, const std::string& taskset, std::uint64_t seed,
                               const ExperimentConfig& cfg) {
  ordered_json j;
  j["format"] = "mcs-evaluation";
  j["version"] = 1;
  j["taskset"] = taskset;
  j["model"] = e.model;
  j["seed"] = seed;
  j["config_hash"] = hex(cfg.hash());
  j["code_version"] = code_version();
  j["total_reward"] = e.total_reward;
  j["metrics"] = metrics_json(e.metrics);
  return j.dump(2) + "\n";
}

std::pair<std::string, Evaluation> evaluation_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string{}) != "mcs-evaluation") throw std::invalid_argument("not an evaluation result");
  Evaluation e;
  e.model = j.at("model").get<std::string>();
  e.total_reward = j.at("total_reward").get<double>();
  e.metrics = sim::metrics_from_json(j.at("metrics").dump());
  return {j.at("taskset").get<std::string>(), e};
}

// --- compare -----------------------------------------------------------------

std::string Ratio::str() const {
  switch (kind) {
    case Kind::Infinite: return "inf";
    case Kind::Undefined: return "undefined";
    case Kind::Finite: break;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << value;
  return os.str();
}

Ratio ratio(std::uint64_t baseline, std::uint64_t agent) {
  if (agent == 0) return {baseline == 0 ? Ratio::Kind::Undefined : Ratio::Kind::Infinite, 0.0};
  return {Ratio::Kind::Finite, static_cast<double>(baseline) / static_cast<double>(agent)};
}

QuantileSummary summarize(const std::vector<Ratio>& ratios) {
  QuantileSummary q;
  std::vector<double> v;
  for (const auto& r : ratios) {
    if (r.kind == Ratio::Kind::Finite) v.push_back(r.value);
    if (r.kind == Ratio::Kind::Infinite) ++q.infinite;
    if (r.kind == Ratio::Kind::Undefined) ++q.undefined;
  }
  q.finite = v.size();
  if (v.empty()) {
    q.min = q.q25 = q.median = q.q75 = q.max = std::numeric_limits<double>::quiet_NaN();
    return q;
  }
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  q.min = v.front();
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  q.max = v.back();
  return q;
}

const Evaluation& best_of(const std::vector<Evaluation>& models) {
  if (models.empty()) throw std::invalid_argument("no models to choose from");
  const Evaluation* best = &models.front();
  for (const auto& m : models) {
    if (m.total_reward > best->total_reward ||
        (m.total_reward == best->total_reward && m.metrics.mode_changes < best->metrics.mode_changes)) {
      best = &m;
    }
  }
  return *best;
}

ComparisonReport cmd_compare(const std::vector<std::pair<std::string, Evaluation>>& results) {
  std::map<std::string, std::optional<Evaluation>> baselines;
  std::map<std::string, std::vector<Evaluation>> models;
  for (const auto& [set, e] : results) {
    if (e.model == "baseline") {
      if (baselines[set]) throw std::invalid_argument("task set " + set + " has more than one baseline");
      baselines[set] = e;
    } else {
      models[set].push_back(e);
      baselines.try_emplace(set);
    }
  }
  ComparisonReport report;
  std::vector<Ratio> mc, kills;
  for (const auto& [set, base] : baselines) {
    if (!base) throw std::invalid_argument("task set " + set + " has no baseline evaluation");
    auto it = models.find(set);
    if (it == models.end()) throw std::invalid_argument("task set " + set + " has no agent evaluation");
    SetComparison c;
    c.taskset = set;
    c.baseline = *base;
    c.best = best_of(it->second);
    c.mode_changes = ratio(c.baseline.metrics.mode_changes, c.best.metrics.mode_changes);
    c.lo_kills = ratio(c.baseline.metrics.lo_job_kills, c.best.metrics.lo_job_kills);
    mc.push_back(c.mode_changes);
    kills.push_back(c.lo_kills);
    report.sets.push_back(std::move(c));
  }
  report.mode_changes = summarize(mc);
  report.lo_kills = summarize(kills);
  return report;
}

namespace {
ordered_json quantiles_json(const QuantileSummary& q) {
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); };
  return {{"min", num(q.min)},       {"q25", num(q.q25)},         {"median", num(q.median)},
          {"q75", num(q.q75)},       {"max", num(q.max)},         {"finite", q.finite},
          {"infinite", q.infinite}, {"undefined", q.undefined}};
}
}  // namespace

namespace {

// Finite ratios as numbers, the others as "inf" / "undefined".
ordered_json ratio_json(const Ratio& r) {
  if (r.kind == Ratio::Kind::Finite) return r.value;
  return r.str();
}

}  // namespace

std::string report_json(const ComparisonReport& report, const ExperimentConfig& cfg) {
  ordered_json j;
  j["format"] = "mcs-report";
  j["version"] = 1;
  j["config_hash"] = hex(cfg.hash());
  j["code_version"] = code_version();
  j["config"] = config_json(cfg);
  ordered_json sets = ordered_json::array();
  for (const auto& s : report.sets) {
    sets.push_back({{"taskset", s.taskset},
                    {"best_model", s.best.model},
                    {"best_reward", s.best.total_reward},
                    {"baseline", metrics_json(s.baseline.metrics)},
                    {"agent", metrics_json(s.best.metrics)},
                    {"mode_change_ratio", ratio_json(s.mode_changes)},
                    {"lo_kill_ratio", ratio_json(s.lo_kills)}});
  }
  j["sets"] = sets;
  j["mode_changes"] = quantiles_json(report.mode_changes);
  j["lo_kills"] = quantiles_json(report.lo_kills);
  return j.dump(2) + "\n";
}

std::string report_text(const ComparisonReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "taskset" << std::setw(16) << "best model" << std::right << std::setw(10)
     << "mc base" << std::setw(10) << "mc agent" << std::setw(10) << "ratio" << std::setw(10) << "kill base"
     << std::setw(11) << "kill agent" << std::setw(10) << "ratio" << '\n';
  for (const auto& s : report.sets) {
    os << std::left << std::setw(20) << s.taskset << std::setw(16) << s.best.model << std::right << std::setw(10)
       << s.baseline.metrics.mode_changes << std::setw(10) << s.best.metrics.mode_changes << std::setw(10)
       << s.mode_changes.str() << std::setw(10) << s.baseline.metrics.lo_job_kills << std::setw(11)
       << s.best.metrics.lo_job_kills << std::setw(10) << s.lo_kills.str() << '\n';
  }
  auto line = [&](const char* name, const QuantileSummary& q) {
    os << std::fixed << std::setprecision(2) << name << ": min " << q.min << "  25% " << q.q25 << "  50% " << q.median
       << "  75% " << q.q75 << "  max " << q.max << "  (finite " << q.finite << ", inf " << q.infinite
       << ", undefined " << q.undefined << ")\n";
  };
  line("mode-change ratio", report.mode_changes);
  line("LO-kill ratio", report.lo_kills);
  return os.str();
}

// --- pipeline ----------------------------------------------------------------

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.check();
  PipelineResult result;
  struct SetInfo {
    std::string name;
    std::uint64_t seed;
    TaskSet ts;
  };
  std::vector<SetInfo> sets;
  for (std::uint32_t index = 0; sets.size() < cfg.num_tasksets; ++index) {
    if (index > 100 * cfg.num_tasksets) throw std::runtime_error("too few schedulable task sets");
    auto gen = cfg.generator;
    gen.seed = taskset_seed(cfg, index);
    TaskSet ts = workload::generate_taskset(gen);
    if (!analysis::amc_rtb_test(ts).schedulable) {
      result.skipped_seeds.push_back(gen.seed);
      continue;
    }
    std::ostringstream name;
    name << "taskset_" << std::setw(3) << std::setfill('0') << index;
    sets.push_back({name.str(), gen.seed, std::move(ts)});
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& s : sets) write_file(fs::path(out_dir) / (s.name + ".json"), serialize_taskset(s.ts));
  }

  const std::size_t g = cfg.grid.size();
  const std::size_t per_set = g + 1;  // slot 0 is the baseline
  std::vector<Evaluation> evals(sets.size() * per_set);
  parallel_for(evals.size(), worker_count(cfg), [&](std::size_t job) {
    const auto& s = sets[job / per_set];
    const std::size_t slot = job % per_set;
    const auto seed = eval_seed(cfg, s.seed);
    if (slot == 0) {
      evals[job] = evaluate(s.ts, cfg, nullptr, seed);
      return;
    }
    const auto& point = cfg.grid[slot - 1];
    auto trained = train(s.ts, cfg, point, train_seed(cfg, s.seed, slot - 1));
    if (!out_dir.empty()) {
      const std::string stem = s.name + "_model" + std::to_string(slot - 1);
      agent::save_checkpoint_file((fs::path(out_dir) / (stem + ".ckpt")).string(), trained.agent);
      write_file(fs::path(out_dir) / (stem + "_train.csv"), training_log_csv(trained.agent.log()));
    }
    evals[job] = evaluate(s.ts, cfg, &trained.agent, seed);
    evals[job].model = point.label();
  });
  for (std::size_t k = 0; k < evals.size(); ++k) result.evaluations.emplace_back(sets[k / per_set].name, evals[k]);
  result.report = cmd_compare(result.evaluations);
  if (!out_dir.empty()) {
    write_file(fs::path(out_dir) / "report.json", report_json(result.report, cfg));
    write_file(fs::path(out_dir) / "report.txt", report_text(result.report));
  }
  return result;
}

}  // namespace mcs::experiment
