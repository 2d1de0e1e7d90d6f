#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mcs/time.hpp"

namespace mcs {

using TaskId = std::size_t;
using Rational = boost::multiprecision::cpp_rational;

enum class CriticalityLevel { LO = 0, HI = 1 };

std::string_view to_string(CriticalityLevel level);
CriticalityLevel parse_criticality(std::string_view text);

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Translated Weibull: location + scale * W where W ~ Weibull(shape, 1).
// scale is expressed in ticks.
struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
  SimTime location{};

  // Quantile of the non-translated part, in ticks.
  double offset_quantile(double p) const;
  // Quantile of the translated distribution, in ticks.
  double quantile(double p) const { return static_cast<double>(location.ticks()) + offset_quantile(p); }
  // Mean of the translated distribution, in ticks.
  double mean() const;

  bool operator==(const WeibullParams&) const = default;
};

struct Runnable {
  SimTime period;
  SimTime acet;
  SimTime bcet;
  SimTime wcet;
  CriticalityLevel criticality = CriticalityLevel::LO;
  WeibullParams weibull;

  bool operator==(const Runnable&) const = default;
};

struct Task {
  TaskId id = 0;
  SimTime period;
  SimTime deadline;
  CriticalityLevel criticality = CriticalityLevel::LO;
  SimTime c_lo;
  std::optional<SimTime> c_hi;
  int priority = 0;  // lower number = higher priority
  std::vector<Runnable> runnables;

  bool is_hi() const { return criticality == CriticalityLevel::HI; }
  // C(level); throws for C(HI) of a LO-task.
  SimTime wcet_at(CriticalityLevel level) const;
  SimTime bcet_sum() const;
  SimTime wcet_sum() const;

  bool operator==(const Task&) const = default;
};

// The lowest-priority HI task hosting the agent. It has no budget at all,
// which is represented by the absence of a budget field rather than a sentinel.
struct AgentTaskSpec {
  SimTime min_interarrival = SimTime::from_ms(10);
  WeibullParams weibull;

  bool operator==(const AgentTaskSpec&) const = default;
};

struct TaskSet {
  std::vector<Task> tasks;  // tasks[i].id == i
  AgentTaskSpec agent_task;

  std::size_t size() const { return tasks.size(); }
  bool empty() const { return tasks.empty(); }
  const Task& operator[](TaskId id) const { return tasks.at(id); }
  Task& operator[](TaskId id) { return tasks.at(id); }

  // Task ids ordered from highest to lowest priority.
  std::vector<TaskId> by_priority() const;

  bool operator==(const TaskSet&) const = default;
};

// Per-task LO-mode budgets indexed by task id. The agent task has no entry.
class BudgetConfiguration {
 public:
  BudgetConfiguration() = default;
  explicit BudgetConfiguration(std::vector<SimTime> budgets);

  // Budgets equal to the design-time C(LO) of every task.
  static BudgetConfiguration design(const TaskSet& ts);

  SimTime operator[](TaskId id) const { return budgets_.at(id); }
  void set(TaskId id, SimTime budget);
  std::size_t size() const { return budgets_.size(); }
  const std::vector<SimTime>& values() const { return budgets_; }

  bool operator==(const BudgetConfiguration&) const = default;

 private:
  std::vector<SimTime> budgets_;
};

// Throws InvariantViolation naming the first violated invariant.
void check_invariants(const Task& task);
void check_invariants(const TaskSet& ts);
// Additional layout rule of generated automotive sets: at most one task per
// (period, criticality) pair.
void check_automotive_layout(const TaskSet& ts);

// Sum of C_i(level)/T_i over the tasks defined at that level, exactly.
Rational utilization(const TaskSet& ts, CriticalityLevel level);

}  // namespace mcs
