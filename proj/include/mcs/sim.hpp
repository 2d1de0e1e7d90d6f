#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcs/analysis.hpp"
#include "mcs/model.hpp"
#include "mcs/rng.hpp"

// Discrete-event simulator of AMC+ on a single core. A LO-job that overruns
// its budget is killed; a HI-job overrun switches the system to HI-mode.
namespace mcs::sim {

using JobId = std::uint64_t;

enum class Mode { LO, HI };
std::string_view to_string(Mode mode);

enum class EventKind { JobArrival, JobCompletion, BudgetOverrun };
std::string_view to_string(EventKind kind);

struct Event {
  SimTime time;
  EventKind kind = EventKind::JobArrival;
  TaskId task = 0;
  JobId job = 0;      // 0 for arrivals
  int priority = 0;   // arrival tie-break: lower value first
  std::uint64_t sequence = 0;

  bool is_termination() const { return kind != EventKind::JobArrival; }
};

// Ordered by time; at equal time terminations precede arrivals, arrivals go
// in priority order, and the insertion sequence breaks remaining ties.
struct EventOrder {
  bool operator()(const Event& a, const Event& b) const;
};

class EventQueue {
 public:
  // Returns the sequence number identifying the event.
  std::uint64_t push(Event event);
  Event pop();
  const Event& top() const;
  bool cancel(std::uint64_t sequence);
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }
  std::size_t terminations() const { return terminations_; }

 private:
  std::set<Event, EventOrder> events_;
  std::unordered_map<std::uint64_t, std::set<Event, EventOrder>::iterator> by_sequence_;
  std::uint64_t next_sequence_ = 0;
  std::size_t terminations_ = 0;
};

// Scheduling events that carry a reward for the agent.
enum class RewardEvent { JobStart, LoOverrun, HiOverrun };

struct Metrics {
  std::uint64_t mode_changes = 0;        // LO -> HI switches
  std::uint64_t mode_reentries = 0;      // HI -> LO switches
  std::uint64_t lo_job_kills = 0;        // LO-job budget overruns
  std::uint64_t hi_budget_overruns = 0;
  std::uint64_t lo_jobs_purged = 0;      // LO-jobs dropped by a mode switch
  std::uint64_t lo_arrivals_deferred = 0;
  std::uint64_t job_starts = 0;
  std::uint64_t completions = 0;
  std::uint64_t deadline_misses = 0;
  std::uint64_t hi_deadline_misses = 0;
  std::uint64_t lo_deadline_misses = 0;
  std::uint64_t agent_activations = 0;
  std::uint64_t agent_applied = 0;
  std::uint64_t agent_rejected = 0;
  std::uint64_t events = 0;

  bool operator==(const Metrics&) const = default;
};

std::string metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const std::string& text);

struct TraceRecord {
  SimTime time;
  EventKind kind;
  TaskId task;  // the agent task is reported as TaskSet::size()
  JobId job;
  Mode mode;    // mode after the event was handled

  bool operator==(const TraceRecord&) const = default;
};

// One line per record: "<ticks> <kind> <task> <job> <mode>".
void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace);

struct AgentObservation {
  SimTime now;
  const BudgetConfiguration& budgets;
  const std::vector<SimTime>& last_exec;  // most recent job execution time per task
  std::span<const RewardEvent> events;    // since the last application
};

class AgentHook {
 public:
  virtual ~AgentHook() = default;
  // Called when an agent job is first dispatched. The returned configuration
  // is validated and applied when that job completes.
  virtual std::optional<BudgetConfiguration> on_activation(const AgentObservation& obs) = 0;
  virtual void on_outcome(bool /*applied*/) {}
};

// Replaces execution-time sampling: (task, admitted job index, task stream).
using ExecOverride = std::function<SimTime(const Task&, std::uint64_t, Rng&)>;

struct SimConfig {
  SimTime duration = SimTime::from_seconds(1);
  std::uint64_t seed = 1;
  bool trace = false;
  analysis::ValidationOptions validation;
  bool affected_only_scope = false;
  bool cap_hi_at_c_hi = false;
  ExecOverride exec_override;
  std::function<SimTime(std::uint64_t)> agent_exec_override;
  std::optional<BudgetConfiguration> initial_budgets;  // default: C(LO)
};

struct RunResult {
  Metrics metrics;
  std::vector<TraceRecord> trace;
  BudgetConfiguration final_budgets;
};

class StaleEventError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// With an agent hook the agent task is hosted at the lowest priority; the
// task set must then be AMC-rtb schedulable. Without a hook it is omitted.
RunResult run(const TaskSet& ts, const SimConfig& cfg, AgentHook* agent = nullptr);

}  // namespace mcs::sim
