#include "mcs/sim.hpp"

#include <algorithm>
#include <climits>
#include <ostream>

#include <json.hpp>

#include "mcs/workload.hpp"

namespace mcs::sim {

std::string_view to_string(Mode mode) { return mode == Mode::HI ? "HI" : "LO"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::JobArrival: return "arrival";
    case EventKind::JobCompletion: return "completion";
    case EventKind::BudgetOverrun: return "overrun";
  }
  return "?";
}

bool EventOrder::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time < b.time;
  if (a.is_termination() != b.is_termination()) return a.is_termination();
  if (!a.is_termination() && a.priority != b.priority) return a.priority < b.priority;
  return a.sequence < b.sequence;
}

std::uint64_t EventQueue::push(Event event) {
  event.sequence = next_sequence_++;
  auto [it, inserted] = events_.insert(event);
  by_sequence_.emplace(event.sequence, it);
  if (event.is_termination()) ++terminations_;
  return event.sequence;
}

const Event& EventQueue::top() const {
  if (events_.empty()) throw std::out_of_range("event queue is empty");
  return *events_.begin();
}

Event EventQueue::pop() {
  Event e = top();
  events_.erase(events_.begin());
  by_sequence_.erase(e.sequence);
  if (e.is_termination()) --terminations_;
  return e;
}

bool EventQueue::cancel(std::uint64_t sequence) {
  auto found = by_sequence_.find(sequence);
  if (found == by_sequence_.end()) return false;
  if (found->second->is_termination()) --terminations_;
  events_.erase(found->second);
  by_sequence_.erase(found);
  return true;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["mode_changes"] = m.mode_changes;
  j["mode_reentries"] = m.mode_reentries;
  j["lo_job_kills"] = m.lo_job_kills;
  j["hi_budget_overruns"] = m.hi_budget_overruns;
  j["lo_jobs_purged"] = m.lo_jobs_purged;
  j["lo_arrivals_deferred"] = m.lo_arrivals_deferred;
  j["job_starts"] = m.job_starts;
  j["completions"] = m.completions;
  j["deadline_misses"] = m.deadline_misses;
  j["hi_deadline_misses"] = m.hi_deadline_misses;
  j["lo_deadline_misses"] = m.lo_deadline_misses;
  j["agent_activations"] = m.agent_activations;
  j["agent_applied"] = m.agent_applied;
  j["agent_rejected"] = m.agent_rejected;
  j["events"] = m.events;
  return j.dump(2);
}

Metrics metrics_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Metrics m;
  m.mode_changes = j.at("mode_changes");
  m.mode_reentries = j.at("mode_reentries");
  m.lo_job_kills = j.at("lo_job_kills");
  m.hi_budget_overruns = j.at("hi_budget_overruns");
  m.lo_jobs_purged = j.at("lo_jobs_purged");
  m.lo_arrivals_deferred = j.at("lo_arrivals_deferred");
  m.job_starts = j.at("job_starts");
  m.completions = j.at("completions");
  m.deadline_misses = j.at("deadline_misses");
  m.hi_deadline_misses = j.at("hi_deadline_misses");
  m.lo_deadline_misses = j.at("lo_deadline_misses");
  m.agent_activations = j.at("agent_activations");
  m.agent_applied = j.at("agent_applied");
  m.agent_rejected = j.at("agent_rejected");
  m.events = j.at("events");
  return m;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
  for (const auto& r : trace) {
    out << r.time.ticks() << ' ' << to_string(r.kind) << ' ' << r.task << ' ' << r.job << ' ' << to_string(r.mode)
        << '\n';
  }
}

namespace {

constexpr int kAgentPriority = INT_MAX;

struct Job {
  JobId id = 0;
  TaskId task = 0;
  int priority = 0;
  bool hi = false;
  bool agent = false;
  bool started = false;
  SimTime release;
  SimTime absolute_deadline;
  SimTime exec_time;
  SimTime consumed;
  std::optional<SimTime> budget;  // nullopt: unbounded
};

class Engine {
 public:
  Engine(const TaskSet& ts, const SimConfig& cfg, AgentHook* agent)
      : ts_(ts), cfg_(cfg), agent_(agent), n_(ts.size()), agent_id_(ts.size()) {
    budgets_ = cfg.initial_budgets ? *cfg.initial_budgets : BudgetConfiguration::design(ts);
    if (budgets_.size() != n_) throw std::invalid_argument("initial budgets do not match the task set");
    for (TaskId i = 0; i < n_; ++i) exec_rng_.push_back(make_stream(cfg.seed, "exec", i));
    agent_rng_ = make_stream(cfg.seed, "agent-exec");
    admitted_.assign(n_, 0);
    pending_arrival_.assign(n_ + 1, std::nullopt);
    deferred_lo_.assign(n_, false);
    last_exec_.assign(n_, SimTime::zero());
    if (agent_) {
      const auto design = analysis::amc_rtb_test(ts);
      tables_ = analysis::precompute_ceilings(ts, design);
    }
  }

  RunResult run() {
    for (const auto& t : ts_.tasks) arm_arrival(t.id, SimTime::zero());
    if (agent_) arm_arrival(agent_id_, SimTime::zero());

    // The event that first moves the clock past the duration is still handled.
    while (!queue_.empty() && clock_ <= cfg_.duration) {
      const Event ev = queue_.pop();
      clock_ = ev.time;
      ++m_.events;
      switch (ev.kind) {
        case EventKind::JobArrival: handle_arrival(ev); break;
        case EventKind::JobCompletion: handle_completion(ev); break;
        case EventKind::BudgetOverrun: handle_overrun(ev); break;
      }
      if (queue_.terminations() > 1) throw std::logic_error("more than one pending termination event");
      if (cfg_.trace) trace_.push_back({ev.time, ev.kind, ev.task, ev.job, mode_});
    }
    count_unfinished_misses();
    return RunResult{m_, std::move(trace_), budgets_};
  }

 private:
  // --- events -------------------------------------------------------------

  void arm_arrival(TaskId task, SimTime at) {
    Event e;
    e.time = at;
    e.kind = EventKind::JobArrival;
    e.task = task;
    e.priority = task == agent_id_ ? kAgentPriority : ts_[task].priority;
    pending_arrival_[task] = queue_.push(e);
  }

  void handle_arrival(const Event& ev) {
    pending_arrival_[ev.task].reset();
    if (ev.task == agent_id_) {
      if (agent_job_pending_) {
        agent_arrival_deferred_ = true;
        return;
      }
      release_agent_job();
      return;
    }
    const Task& task = ts_[ev.task];
    if (mode_ == Mode::HI && !task.is_hi()) {
      // Re-released when the processor idles; the periodic stream pauses.
      deferred_lo_[task.id] = true;
      ++m_.lo_arrivals_deferred;
      return;
    }
    Job job;
    job.id = next_job_id_++;
    job.task = task.id;
    job.priority = task.priority;
    job.hi = task.is_hi();
    job.release = clock_;
    job.absolute_deadline = clock_ + task.deadline;
    job.exec_time = sample_exec(task);
    job.budget = budgets_[task.id];
    enqueue(job);
    arm_arrival(task.id, clock_ + task.period);
    schedule();
  }

  void release_agent_job() {
    Job job;
    job.id = next_job_id_++;
    job.task = agent_id_;
    job.priority = kAgentPriority;
    job.hi = true;
    job.agent = true;
    job.release = clock_;
    job.absolute_deadline = SimTime::max();
    job.exec_time = cfg_.agent_exec_override ? cfg_.agent_exec_override(agent_jobs_)
                                             : workload::sample_weibull(ts_.agent_task.weibull, agent_rng_);
    ++agent_jobs_;
    agent_job_pending_ = true;
    enqueue(job);
    arm_arrival(agent_id_, clock_ + ts_.agent_task.min_interarrival);
    schedule();
  }

  void handle_completion(const Event& ev) {
    Job job = take_running(ev);
    if (job.agent) {
      agent_job_pending_ = false;
      apply_proposal();
      if (agent_arrival_deferred_) {
        agent_arrival_deferred_ = false;
        arm_arrival(agent_id_, clock_);
      }
    } else {
      ++m_.completions;
      last_exec_[job.task] = job.exec_time;
      if (clock_ > job.absolute_deadline) record_miss(job);
    }
    if (ready_.empty()) {
      if (mode_ == Mode::HI) switch_to_lo();
      return;
    }
    schedule();
  }

  void handle_overrun(const Event& ev) {
    if (mode_ != Mode::LO) throw StaleEventError("budget overrun event in HI-mode");
    Job& job = running_checked(ev);
    job.consumed += clock_ - running_since_;
    running_since_ = clock_;
    termination_.reset();
    if (!job.hi) {
      last_exec_[job.task] = job.consumed;
      running_.reset();
      ++m_.lo_job_kills;
      reward(RewardEvent::LoOverrun);
      schedule();
      return;
    }
    mode_ = Mode::HI;
    ++m_.mode_changes;
    ++m_.hi_budget_overruns;
    reward(RewardEvent::HiOverrun);
    auto lo_begin = std::remove_if(ready_.begin(), ready_.end(), [&](const Job& j) {
      if (j.hi) return false;
      deferred_lo_[j.task] = true;
      ++m_.lo_jobs_purged;
      return true;
    });
    ready_.erase(lo_begin, ready_.end());
    schedule_termination();
  }

  // --- scheduler ----------------------------------------------------------

  // Ready jobs sorted so that back() is the highest-priority job.
  void enqueue(const Job& job) {
    auto pos = std::upper_bound(ready_.begin(), ready_.end(), job, [](const Job& a, const Job& b) {
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.id > b.id;
    });
    ready_.insert(pos, job);
  }

  void schedule() {
    if (ready_.empty()) return;
    if (running_) {
      if (ready_.back().priority >= running_->priority) return;
      running_->consumed += clock_ - running_since_;
      queue_.cancel(*termination_);
      termination_.reset();
      Job preempted = *running_;
      running_.reset();
      enqueue(preempted);
    }
    Job next = ready_.back();
    ready_.pop_back();
    dispatch(next);
  }

  void dispatch(Job job) {
    const bool first = !job.started;
    job.started = true;
    running_ = job;
    running_since_ = clock_;
    if (first) {
      if (job.agent) {
        activate_agent();
      } else {
        ++m_.job_starts;
        reward(RewardEvent::JobStart);
      }
    }
    schedule_termination();
  }

  void schedule_termination() {
    const Job& job = *running_;
    const SimTime remaining = job.exec_time - job.consumed;
    Event e;
    e.task = job.task;
    e.job = job.id;
    e.kind = EventKind::JobCompletion;
    e.time = clock_ + remaining;
    if (mode_ == Mode::LO && job.budget) {
      if (job.consumed >= *job.budget) throw std::logic_error("dispatched job has exhausted its budget");
      const SimTime left = *job.budget - job.consumed;
      if (remaining > left) {
        e.kind = EventKind::BudgetOverrun;
        e.time = clock_ + left;
      }
    }
    termination_ = queue_.push(e);
  }

  Job& running_checked(const Event& ev) {
    if (!running_ || running_->id != ev.job || !termination_ || *termination_ != ev.sequence) {
      throw StaleEventError("termination event for job " + std::to_string(ev.job) + " does not match the running job");
    }
    return *running_;
  }

  Job take_running(const Event& ev) {
    Job job = running_checked(ev);
    job.consumed = job.exec_time;
    running_.reset();
    termination_.reset();
    return job;
  }

  void switch_to_lo() {
    mode_ = Mode::LO;
    ++m_.mode_reentries;
    for (TaskId i = 0; i < n_; ++i) {
      if (!deferred_lo_[i]) continue;
      deferred_lo_[i] = false;
      if (pending_arrival_[i]) queue_.cancel(*pending_arrival_[i]);
      arm_arrival(i, clock_);
    }
  }

  // --- agent --------------------------------------------------------------

  void reward(RewardEvent e) {
    if (agent_ && window_open_) window_.push_back(e);
  }

  void activate_agent() {
    ++m_.agent_activations;
    window_open_ = false;
    AgentObservation obs{clock_, budgets_, last_exec_, window_};
    proposal_ = agent_->on_activation(obs);
  }

  void apply_proposal() {
    window_.clear();
    window_open_ = true;
    if (!proposal_) return;
    BudgetConfiguration proposal = std::move(*proposal_);
    proposal_.reset();
    if (proposal.size() != n_) throw std::invalid_argument("agent proposal has the wrong number of budgets");
    analysis::ValidationScope scope;
    if (cfg_.affected_only_scope) {
      std::vector<TaskId> modified;
      for (TaskId i = 0; i < n_; ++i) {
        if (proposal[i] != budgets_[i]) modified.push_back(i);
      }
      scope = analysis::ValidationScope::affected_only(std::move(modified));
    }
    const bool ok = analysis::validate_configuration(proposal, *tables_, scope, cfg_.validation).valid();
    if (ok) {
      budgets_ = std::move(proposal);
      ++m_.agent_applied;
    } else {
      ++m_.agent_rejected;
    }
    agent_->on_outcome(ok);
  }

  // --- accounting ---------------------------------------------------------

  SimTime sample_exec(const Task& task) {
    Rng& rng = exec_rng_[task.id];
    const std::uint64_t index = admitted_[task.id]++;
    SimTime exec = cfg_.exec_override ? cfg_.exec_override(task, index, rng) : workload::sample_task_execution(task, rng);
    if (cfg_.cap_hi_at_c_hi && task.c_hi) exec = min(exec, *task.c_hi);
    return exec;
  }

  void record_miss(const Job& job) {
    ++m_.deadline_misses;
    if (job.hi) {
      ++m_.hi_deadline_misses;
    } else {
      ++m_.lo_deadline_misses;
    }
  }

  void count_unfinished_misses() {
    auto check = [&](const Job& j) {
      if (!j.agent && j.absolute_deadline < clock_) record_miss(j);
    };
    for (const auto& j : ready_) check(j);
    if (running_) check(*running_);
  }

  const TaskSet& ts_;
  const SimConfig& cfg_;
  AgentHook* agent_;
  const std::size_t n_;
  const TaskId agent_id_;

  EventQueue queue_;
  SimTime clock_;
  Mode mode_ = Mode::LO;
  std::vector<Job> ready_;
  std::optional<Job> running_;
  SimTime running_since_;
  std::optional<std::uint64_t> termination_;
  JobId next_job_id_ = 1;

  BudgetConfiguration budgets_;
  std::vector<Rng> exec_rng_;
  Rng agent_rng_;
  std::vector<std::uint64_t> admitted_;
  std::vector<std::optional<std::uint64_t>> pending_arrival_;
  std::vector<bool> deferred_lo_;
  std::vector<SimTime> last_exec_;

  std::optional<analysis::CeilingTables> tables_;
  bool agent_job_pending_ = false;
  bool agent_arrival_deferred_ = false;
  std::uint64_t agent_jobs_ = 0;
  std::optional<BudgetConfiguration> proposal_;
  std::vector<RewardEvent> window_;
  bool window_open_ = true;

  Metrics m_;
  std::vector<TraceRecord> trace_;
};

}  // namespace

RunResult run(const TaskSet& ts, const SimConfig& cfg, AgentHook* agent) {
  if (cfg.duration == SimTime::zero()) throw std::invalid_argument("simulation duration must be positive");
  Engine engine(ts, cfg, agent);
  return engine.run();
}

}  // namespace mcs::sim
