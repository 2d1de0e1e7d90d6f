#include "mcs/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace mcs::analysis {

HigherSet higher_priority_set(const TaskSet& ts, TaskId i) {
  HigherSet higher(ts.size(), false);
  for (const auto& t : ts.tasks) higher[t.id] = t.priority < ts[i].priority;
  return higher;
}

ResponseTime response_time_lo(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i) {
  return response_time_lo(ts, budgets, i, higher_priority_set(ts, i));
}

ResponseTime response_time_lo(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i,
                              const HigherSet& higher) {
  const Task& task = ts[i];
  SimTime r = budgets[i];
  if (r > task.deadline) return std::nullopt;
  for (;;) {
    SimTime next = budgets[i];
    for (const auto& other : ts.tasks) {
      if (!higher[other.id]) continue;
      next += budgets[other.id] * ceil_div(r, other.period);
    }
    if (next > task.deadline) return std::nullopt;
    if (next == r) return r;
    r = next;
  }
}

ResponseTime response_time_star(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, SimTime r_lo) {
  return response_time_star(ts, budgets, i, r_lo, higher_priority_set(ts, i));
}

ResponseTime response_time_star(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, SimTime r_lo,
                                const HigherSet& higher) {
  const Task& task = ts[i];
  if (!task.is_hi()) throw std::invalid_argument("R* is defined for HI-tasks only");
  SimTime fixed = *task.c_hi;
  for (const auto& other : ts.tasks) {
    if (higher[other.id] && !other.is_hi()) fixed += budgets[other.id] * ceil_div(r_lo, other.period);
  }
  SimTime r = fixed;
  if (r > task.deadline) return std::nullopt;
  for (;;) {
    SimTime next = fixed;
    for (const auto& other : ts.tasks) {
      if (higher[other.id] && other.is_hi()) next += *other.c_hi * ceil_div(r, other.period);
    }
    if (next > task.deadline) return std::nullopt;
    if (next == r) return r;
    r = next;
  }
}

bool schedulable_at(const TaskSet& ts, const BudgetConfiguration& budgets, TaskId i, const HigherSet& higher) {
  const auto r_lo = response_time_lo(ts, budgets, i, higher);
  if (!r_lo) return false;
  if (!ts[i].is_hi()) return true;
  return response_time_star(ts, budgets, i, *r_lo, higher).has_value();
}

AnalysisResult amc_rtb_test(const TaskSet& ts) { return amc_rtb_test(ts, BudgetConfiguration::design(ts)); }

AnalysisResult amc_rtb_test(const TaskSet& ts, const BudgetConfiguration& budgets) {
  AnalysisResult out;
  out.r_lo.resize(ts.size());
  out.r_star.resize(ts.size());
  for (const auto& t : ts.tasks) {
    const HigherSet higher = higher_priority_set(ts, t.id);
    out.r_lo[t.id] = response_time_lo(ts, budgets, t.id, higher);
    if (!out.r_lo[t.id]) {
      out.schedulable = false;
      continue;
    }
    if (t.is_hi()) {
      out.r_star[t.id] = response_time_star(ts, budgets, t.id, *out.r_lo[t.id], higher);
      if (!out.r_star[t.id]) out.schedulable = false;
    }
  }
  return out;
}

PriorityPolicy parse_priority_policy(const std::string& name) {
  if (name == "dm" || name == "deadline-monotonic") return PriorityPolicy::DeadlineMonotonic;
  if (name == "audsley") return PriorityPolicy::Audsley;
  throw std::invalid_argument("unknown priority policy '" + name + "' (expected dm or audsley)");
}

void assign_deadline_monotonic(TaskSet& ts) {
  std::vector<TaskId> order(ts.size());
  std::iota(order.begin(), order.end(), TaskId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TaskId a, TaskId b) { return ts[a].deadline < ts[b].deadline; });
  for (std::size_t rank = 0; rank < order.size(); ++rank) ts[order[rank]].priority = static_cast<int>(rank);
}

AudsleyResult audsley_assign(const TaskSet& ts) {
  AudsleyResult result;
  const std::size_t n = ts.size();
  const BudgetConfiguration budgets = BudgetConfiguration::design(ts);
  std::vector<bool> unassigned(n, true);
  std::vector<int> priorities(n, 0);

  // Among tasks of one criticality, the largest deadline is the best
  // candidate for the lowest free level; ties go to the larger id so that
  // equal-deadline tasks end up in id order.
  auto candidate = [&](CriticalityLevel level) -> std::optional<TaskId> {
    std::optional<TaskId> best;
    for (const auto& t : ts.tasks) {
      if (!unassigned[t.id] || t.criticality != level) continue;
      if (!best || t.deadline >= ts[*best].deadline) best = t.id;
    }
    return best;
  };

  for (std::size_t level = n; level-- > 0;) {
    bool placed = false;
    for (CriticalityLevel crit : {CriticalityLevel::LO, CriticalityLevel::HI}) {
      const auto c = candidate(crit);
      if (!c) continue;
      HigherSet higher = unassigned;
      higher[*c] = false;
      ++result.tests;
      if (schedulable_at(ts, budgets, *c, higher)) {
        priorities[*c] = static_cast<int>(level);
        unassigned[*c] = false;
        placed = true;
        break;
      }
    }
    if (!placed) return result;
  }
  result.priorities = std::move(priorities);
  return result;
}

bool assign_priorities(TaskSet& ts, PriorityPolicy policy) {
  assign_deadline_monotonic(ts);
  if (policy == PriorityPolicy::DeadlineMonotonic) return true;
  const auto result = audsley_assign(ts);
  if (!result.feasible()) return false;
  for (auto& t : ts.tasks) t.priority = (*result.priorities)[t.id];
  return true;
}

CeilingTables precompute_ceilings(const TaskSet& ts, const AnalysisResult& analysis) {
  if (!analysis.schedulable) throw std::invalid_argument("ceilings require an AMC-rtb schedulable task set");
  const auto n = static_cast<Eigen::Index>(ts.size());
  CeilingTables c;
  c.hp_ceil = CeilingTables::Matrix::Zero(n, n);
  c.hpl_ceil = CeilingTables::Matrix::Zero(n, n);
  c.lo_ceil = CeilingTables::Matrix::Zero(n, n);
  c.hph_const = CeilingTables::Vector::Zero(n);
  c.r_lo = CeilingTables::Vector::Zero(n);
  c.deadline = CeilingTables::Vector::Zero(n);
  c.is_hi.resize(ts.size());
  c.priority.resize(ts.size());
  for (const auto& ti : ts.tasks) {
    const auto i = static_cast<Eigen::Index>(ti.id);
    const SimTime r_lo = *analysis.r_lo.at(ti.id);
    c.r_lo(i) = static_cast<std::int64_t>(r_lo.ticks());
    c.deadline(i) = static_cast<std::int64_t>(ti.deadline.ticks());
    c.is_hi[ti.id] = ti.is_hi();
    c.priority[ti.id] = ti.priority;
    if (ti.is_hi()) c.hph_const(i) = static_cast<std::int64_t>(ti.c_hi->ticks());
    for (const auto& tj : ts.tasks) {
      if (tj.priority >= ti.priority) continue;
      const auto j = static_cast<Eigen::Index>(tj.id);
      const auto by_response = static_cast<std::int64_t>(ceil_div(r_lo, tj.period));
      c.hp_ceil(i, j) = by_response;
      c.lo_ceil(i, j) = static_cast<std::int64_t>(ceil_div(ti.deadline, tj.period));
      if (!ti.is_hi()) continue;
      if (tj.is_hi()) {
        c.hph_const(i) += static_cast<std::int64_t>((*tj.c_hi * ceil_div(ti.deadline, tj.period)).ticks());
      } else {
        c.hpl_ceil(i, j) = by_response;
      }
    }
  }
  return c;
}

std::vector<TaskId> affected_tasks(const CeilingTables& tables, const std::vector<TaskId>& modified) {
  std::vector<TaskId> out;
  if (modified.empty()) return out;
  int top = tables.priority.at(modified.front());
  for (TaskId m : modified) top = std::min(top, tables.priority.at(m));
  for (TaskId i = 0; i < tables.size(); ++i) {
    if (tables.priority[i] >= top) out.push_back(i);
  }
  return out;
}

ValidationResult validate_configuration(const BudgetConfiguration& budgets, const CeilingTables& tables,
                                        const ValidationScope& scope, const ValidationOptions& options) {
  const std::size_t n = tables.size();
  if (budgets.size() != n) throw std::invalid_argument("budget configuration does not match the ceiling tables");
  CeilingTables::Vector b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = static_cast<std::int64_t>(budgets[i].ticks());

  std::vector<bool> in_scope(n, scope.all);
  if (!scope.all) {
    for (TaskId i : affected_tasks(tables, scope.modified)) in_scope[i] = true;
  }

  ValidationResult result;
  for (std::size_t k = 0; k < n; ++k) {
    if (!in_scope[k]) continue;
    const auto i = static_cast<Eigen::Index>(k);
    bool ok;
    if (tables.is_hi[k]) {
      const std::int64_t lo_demand = b(i) + tables.hp_ceil.row(i).dot(b);
      const std::int64_t switch_demand = tables.hph_const(i) + tables.hpl_ceil.row(i).dot(b);
      ok = lo_demand <= tables.r_lo(i) && switch_demand <= tables.deadline(i);
    } else {
      ok = !options.check_lo_tasks || b(i) + tables.lo_ceil.row(i).dot(b) <= tables.deadline(i);
    }
    if (!ok) result.violated.push_back(k);
  }
  return result;
}

std::string analysis_report(const TaskSet& ts, const AnalysisResult& result) {
  nlohmann::ordered_json doc;
  doc["format"] = "mcs-analysis";
  doc["version"] = 1;
  doc["schedulable"] = result.schedulable;
  auto tasks = nlohmann::ordered_json::array();
  for (const auto& t : ts.tasks) {
    nlohmann::ordered_json jt;
    jt["id"] = t.id;
    jt["criticality"] = to_string(t.criticality);
    jt["priority"] = t.priority;
    jt["deadline"] = t.deadline.ticks();
    const auto& lo = result.r_lo.at(t.id);
    jt["r_lo"] = lo ? nlohmann::ordered_json(lo->ticks()) : nlohmann::ordered_json("divergent");
    if (t.is_hi()) {
      const auto& star = result.r_star.at(t.id);
      jt["r_star"] = star ? nlohmann::ordered_json(star->ticks()) : nlohmann::ordered_json("divergent");
    } else {
      jt["r_star"] = nullptr;
    }
    tasks.push_back(std::move(jt));
  }
  doc["tasks"] = std::move(tasks);
  return doc.dump(2) + "\n";
}

}  // namespace mcs::analysis
