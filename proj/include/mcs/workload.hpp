#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcs/analysis.hpp"
#include "mcs/model.hpp"
#include "mcs/rng.hpp"

// Automotive task-set generator: runnable periods, ACETs by UUniFast,
// BCET/WCET factors, Weibull execution-time models and task construction.
namespace mcs::workload {

struct PeriodRow {
  std::uint32_t period_ms;
  std::uint32_t share_percent;
  double acet_min_us, acet_avg_us, acet_max_us;
  double bcet_factor_min, bcet_factor_max;
  double wcet_factor_min, wcet_factor_max;
  double lo_quantile_lo_task, lo_quantile_hi_task;  // budget quantile by task criticality
};

struct PeriodProfile {
  std::vector<PeriodRow> rows;

  static PeriodProfile automotive();
  const PeriodRow& row(SimTime period) const;  // throws for unknown periods
};

struct GeneratorConfig {
  std::uint32_t num_runnables = 150;
  std::uint64_t seed = 1;
  double criticality_split = 0.5;  // probability that a runnable is HI
  std::uint32_t quantile_samples = 1000;
  analysis::PriorityPolicy priority_policy = analysis::PriorityPolicy::DeadlineMonotonic;
  std::uint32_t uunifast_retry_cap = 10'000;
  // When UUniFast exhausts its retries, draw the group from the same
  // distribution (uniform over the bounded simplex) directly instead of failing.
  bool bounded_fallback = true;

  void check() const;
};

class RetryExhausted : public std::runtime_error {
 public:
  RetryExhausted(SimTime period, std::uint32_t attempts);
  SimTime period;
};

class InfeasibleFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kFitLowProbability = 0.00001;
inline constexpr double kFitHighProbability = 0.99999;

std::vector<SimTime> sample_runnable_periods(std::uint32_t n, const PeriodProfile& profile, Rng& rng);

// Classic UUniFast: n positive addends summing to total.
std::vector<double> uunifast(std::uint32_t n, double total, Rng& rng);

// Uniform sample of {x in [lo, hi]^n : sum x = total} (Stafford's
// randfixedsum). Same law as UUniFast conditioned on the box.
std::vector<double> bounded_fixed_sum(std::uint32_t n, double total, double lo, double hi, Rng& rng);

// ACET per runnable (aligned with `periods`). Each period group of size r
// shares a total of r * acet_avg, split by UUniFast with whole-vector
// rejection when any value leaves [acet_min, acet_max].
std::vector<SimTime> assign_acets(const std::vector<SimTime>& periods, const PeriodProfile& profile, Rng& rng,
                                  const GeneratorConfig& cfg = {});

// (bcet, wcet) from Table factors; bcet < acet < wcet, bcet >= 1 tick.
std::pair<SimTime, SimTime> derive_bcet_wcet(SimTime acet, SimTime period, const PeriodProfile& profile, Rng& rng);

// Shape from the quantile anchors (offsets above location), scale from the
// mean offset, location as given.
WeibullParams fit_weibull_anchored(SimTime location, double mean_offset, double low_offset, double low_p,
                                   double high_offset, double high_p);

// 10 ns at p = 0.00001 and wcet - bcet at p = 0.99999; mean acet - bcet.
WeibullParams fit_weibull(SimTime bcet, SimTime acet, SimTime wcet);

SimTime sample_weibull(const WeibullParams& params, Rng& rng);

// One job: sum over runnables of the sampled execution time, each capped at
// the runnable's WCET.
SimTime sample_task_execution(const Task& task, Rng& rng);

// Empirical quantile budget: sorted samples, the ceil(p*samples)-th smallest.
SimTime empirical_quantile(std::vector<SimTime> samples, double p);
SimTime estimate_lo_budget(const Task& task, const PeriodProfile& profile, Rng& rng, std::uint32_t samples = 1000);

// Runnables with periods, criticality, ACET, BCET/WCET and Weibull fits.
std::vector<Runnable> generate_runnables(const GeneratorConfig& cfg, const PeriodProfile& profile);

// One task per (period, criticality); ids ordered by period then LO before HI.
TaskSet build_tasks(const std::vector<Runnable>& runnables, const PeriodProfile& profile,
                    const GeneratorConfig& cfg);

TaskSet generate_taskset(const GeneratorConfig& cfg);

AgentTaskSpec default_agent_task();

}  // namespace mcs::workload
