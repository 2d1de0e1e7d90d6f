#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mcs/model.hpp"

// AMC-rtb response-time analysis, priority assignment and the run-time
// budget-validation checks built from design-time ceilings.
namespace mcs::analysis {

// nullopt means the recurrence exceeded the deadline.
using ResponseTime = std::optional<SimTime>;

// Membership of hp(i): higher[j] is true when task j has higher priority.
using HigherSet = std::vector<bool>;

HigherSet higher_priority_set(const TaskSet& ts, TaskId i);

// Least fixed point of R = B_i + sum_{j in hp(i)} ceil(R/T_j) B_j, starting at B_i.
ResponseTime response_time_lo(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i);
ResponseTime response_time_lo(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i,
                              const HigherSet& higher);

// Response time of a HI-job caught by the mode switch. The LO interference
// term uses the converged r_lo, not R.
ResponseTime response_time_star(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, SimTime r_lo);
ResponseTime response_time_star(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, SimTime r_lo,
                                const HigherSet& higher);

struct AnalysisResult {
  std::vector<ResponseTime> r_lo;    // indexed by task id
  std::vector<ResponseTime> r_star;  // nullopt for LO-tasks as well as divergent HI-tasks
  bool schedulable = true;
};

AnalysisResult amc_rtb_test(const TaskSet& ts);
AnalysisResult amc_rtb_test(const TaskSet& ts, const BudgetConfiguration& budgets);

// Per-task AMC-rtb check at the position described by `higher`.
bool schedulable_at(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, const HigherSet& higher);

enum class PriorityPolicy { DeadlineMonotonic, Audsley };

PriorityPolicy parse_priority_policy(const std::string& name);

// Deadline monotonic, ties broken by lower task id first.
void assign_deadline_monotonic(TaskSet& ts);

struct AudsleyResult {
  std::optional<std::vector<int>> priorities;  // indexed by task id; nullopt when infeasible
  std::size_t tests = 0;                       // schedulability tests performed
  bool feasible() const { return priorities.has_value(); }
};

// Bottom-up optimal assignment. At each level only the largest-deadline
// unassigned LO-task and HI-task are tried, so at most 2n-1 tests are run.
AudsleyResult audsley_assign(const TaskSet& ts);

// Applies the policy in place. Returns false if Audsley finds no feasible
// order (priorities are then left as deadline monotonic).
bool assign_priorities(TaskSet& ts, PriorityPolicy policy);

struct CeilingTables {
  using Matrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

  Matrix hp_ceil;    // ceil(R_i^LO / T_j) for j in hp(i), 0 elsewhere
  Matrix hpl_ceil;   // ceil(R_i^LO / T_j) for j in hpL(i), 0 elsewhere
  Vector hph_const;  // C_i(HI) + sum_{j in hpH(i)} ceil(D_i/T_j) C_j(HI); 0 for LO-tasks
  Matrix lo_ceil;    // ceil(D_i / T_j) for j in hp(i), 0 elsewhere
  Vector r_lo;       // design-time R_i^LO
  Vector deadline;
  std::vector<bool> is_hi;
  std::vector<int> priority;

  std::size_t size() const { return is_hi.size(); }
};

// Throws std::invalid_argument unless the analysis is schedulable.
CeilingTables precompute_ceilings(const TaskSet& ts, const AnalysisResult& analysis);

struct ValidationScope {
  bool all = true;
  std::vector<TaskId> modified;  // used when all == false

  static ValidationScope all_tasks() { return {}; }
  static ValidationScope affected_only(std::vector<TaskId> modified) { return {false, std::move(modified)}; }
};

struct ValidationOptions {
  bool check_lo_tasks = true;  // the LO-task deadline check may be skipped
};

struct ValidationResult {
  std::vector<TaskId> violated;  // empty means valid
  bool valid() const { return violated.empty(); }
};

// Run-time check of a budget configuration against the design-time
// analysis: sums of products with precomputed ceilings, no recurrences.
ValidationResult validate_configuration(const BudgetConfiguration& budgets, const CeilingTables& tables,
                                        const ValidationScope& scope = ValidationScope::all_tasks(),
                                        const ValidationOptions& options = {});

// Tasks whose checks may change when `modified` budgets change: every task
// with priority lower than or equal to the highest-priority modified task.
std::vector<TaskId> affected_tasks(const CeilingTables& tables, const std::vector<TaskId>& modified);

// JSON report with per-task R_i^LO, R_i^* and the schedulable flag.
std::string analysis_report(const TaskSet& ts, const AnalysisResult& result);

}  // namespace mcs::analysis
