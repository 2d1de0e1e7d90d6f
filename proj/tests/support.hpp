#pragma once

#include <optional>
#include <vector>

#include "mcs/analysis.hpp"
#include "mcs/model.hpp"
#include "mcs/workload.hpp"

namespace mcs::testing {

inline SimTime ms(std::uint64_t v) { return SimTime::from_ms(v); }
inline SimTime us(std::uint64_t v) { return SimTime::from_us(v); }

// Hand-built task without runnables; D = T.
inline Task make_task(TaskId id, SimTime period, SimTime c_lo, std::optional<SimTime> c_hi, int priority) {
  Task t;
  t.id = id;
  t.period = period;
  t.deadline = period;
  t.criticality = c_hi ? CriticalityLevel::HI : CriticalityLevel::LO;
  t.c_lo = c_lo;
  t.c_hi = c_hi;
  t.priority = priority;
  return t;
}

inline TaskSet make_set(std::vector<Task> tasks) {
  TaskSet ts;
  ts.tasks = std::move(tasks);
  ts.agent_task = workload::default_agent_task();
  return ts;
}

// Random small set with millisecond parameters; priorities deadline monotonic.
inline TaskSet random_small_set(Rng& rng, std::size_t n) {
  std::vector<Task> tasks;
  static const std::uint64_t periods[] = {5, 10, 20, 25, 40, 50, 100};
  for (std::size_t i = 0; i < n; ++i) {
    const SimTime period = ms(periods[uniform_index(rng, 7)]);
    const std::uint64_t max_c = std::max<std::uint64_t>(1, period.ticks() / SimTime::kTicksPerMilli / (n + 1));
    const SimTime c_lo = ms(1 + uniform_index(rng, max_c));
    std::optional<SimTime> c_hi;
    if (uniform01(rng) < 0.5) c_hi = c_lo + ms(uniform_index(rng, max_c + 1));
    tasks.push_back(make_task(i, period, c_lo, c_hi, 0));
  }
  TaskSet ts = make_set(std::move(tasks));
  analysis::assign_deadline_monotonic(ts);
  return ts;
}

}  // namespace mcs::testing
