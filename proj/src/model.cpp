#include "mcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace mcs {

SimTime SimTime::from_us_real(double us) {
  if (!(us >= 0.0) || !std::isfinite(us)) throw TimeOverflowError("negative or non-finite time");
  const double ticks = std::round(us * static_cast<double>(kTicksPerMicro));
  if (ticks >= 0x1.0p64) throw TimeOverflowError("time out of range");
  return SimTime{static_cast<rep>(ticks)};
}

std::string to_string(SimTime t) { return std::to_string(t.ticks()); }

std::string_view to_string(CriticalityLevel level) { return level == CriticalityLevel::HI ? "HI" : "LO"; }

CriticalityLevel parse_criticality(std::string_view text) {
  if (text == "HI") return CriticalityLevel::HI;
  if (text == "LO") return CriticalityLevel::LO;
  throw std::invalid_argument("unknown criticality level '" + std::string(text) + "'");
}

double WeibullParams::offset_quantile(double p) const {
  return scale * std::pow(-std::log1p(-p), 1.0 / shape);
}

double WeibullParams::mean() const {
  return static_cast<double>(location.ticks()) + scale * std::tgamma(1.0 + 1.0 / shape);
}

SimTime Task::wcet_at(CriticalityLevel level) const {
  if (level == CriticalityLevel::LO) return c_lo;
  if (!c_hi) throw std::logic_error("C(HI) is undefined for LO-task " + std::to_string(id));
  return *c_hi;
}

SimTime Task::bcet_sum() const {
  SimTime s;
  for (const auto& r : runnables) s += r.bcet;
  return s;
}

SimTime Task::wcet_sum() const {
  SimTime s;
  for (const auto& r : runnables) s += r.wcet;
  return s;
}

std::vector<TaskId> TaskSet::by_priority() const {
  std::vector<TaskId> order(tasks.size());
  std::iota(order.begin(), order.end(), TaskId{0});
  std::sort(order.begin(), order.end(),
            [&](TaskId a, TaskId b) { return tasks[a].priority < tasks[b].priority; });
  return order;
}

BudgetConfiguration::BudgetConfiguration(std::vector<SimTime> budgets) : budgets_(std::move(budgets)) {
  for (std::size_t i = 0; i < budgets_.size(); ++i) {
    if (budgets_[i] == SimTime::zero()) {
      throw InvariantViolation("budget of task " + std::to_string(i) + " must be positive");
    }
  }
}

BudgetConfiguration BudgetConfiguration::design(const TaskSet& ts) {
  std::vector<SimTime> b;
  b.reserve(ts.size());
  for (const auto& t : ts.tasks) b.push_back(t.c_lo);
  return BudgetConfiguration{std::move(b)};
}

void BudgetConfiguration::set(TaskId id, SimTime budget) {
  if (budget == SimTime::zero()) throw InvariantViolation("budget of task " + std::to_string(id) + " must be positive");
  budgets_.at(id) = budget;
}

namespace {

[[noreturn]] void violated(const std::string& what) { throw InvariantViolation(what); }

void check_weibull(const WeibullParams& w, const std::string& where) {
  if (!(w.shape > 0.0) || !std::isfinite(w.shape)) violated(where + ": Weibull shape must be > 0");
  if (!(w.scale > 0.0) || !std::isfinite(w.scale)) violated(where + ": Weibull scale must be > 0");
}

}  // namespace

void check_invariants(const Task& t) {
  const std::string where = "task " + std::to_string(t.id);
  if (t.period == SimTime::zero()) violated(where + ": period must be positive");
  if (t.deadline != t.period) violated(where + ": deadline must equal period (D_i = T_i)");
  if (t.c_lo == SimTime::zero()) violated(where + ": C(LO) must be positive");
  if (t.is_hi()) {
    if (!t.c_hi) violated(where + ": HI-task requires C(HI)");
    if (*t.c_hi < t.c_lo) violated(where + ": C(HI) must be >= C(LO)");
  } else if (t.c_hi) {
    violated(where + ": LO-task must not define C(HI)");
  }
  for (std::size_t r = 0; r < t.runnables.size(); ++r) {
    const auto& run = t.runnables[r];
    const std::string rw = where + " runnable " + std::to_string(r);
    if (!(run.bcet <= run.acet && run.acet <= run.wcet)) violated(rw + ": requires bcet <= acet <= wcet");
    check_weibull(run.weibull, rw);
  }
}

void check_invariants(const TaskSet& ts) {
  std::set<int> priorities;
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    const auto& t = ts.tasks[i];
    if (t.id != i) violated("task at position " + std::to_string(i) + " has id " + std::to_string(t.id));
    check_invariants(t);
    if (!priorities.insert(t.priority).second) {
      violated("priority " + std::to_string(t.priority) + " is not unique");
    }
  }
  if (ts.agent_task.min_interarrival == SimTime::zero()) violated("agent task: minimum inter-arrival must be positive");
  check_weibull(ts.agent_task.weibull, "agent task");
}

void check_automotive_layout(const TaskSet& ts) {
  std::set<std::pair<SimTime::rep, int>> seen;
  for (const auto& t : ts.tasks) {
    if (!seen.insert({t.period.ticks(), static_cast<int>(t.criticality)}).second) {
      violated("more than one task with period " + to_string(t.period) + " and criticality " +
               std::string(to_string(t.criticality)));
    }
  }
}

Rational utilization(const TaskSet& ts, CriticalityLevel level) {
  Rational sum{0};
  for (const auto& t : ts.tasks) {
    if (level == CriticalityLevel::HI && !t.is_hi()) continue;
    sum += Rational{t.wcet_at(level).ticks(), t.period.ticks()};
  }
  return sum;
}

}  // namespace mcs
