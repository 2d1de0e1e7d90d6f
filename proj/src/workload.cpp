#include "mcs/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace mcs::workload {

PeriodProfile PeriodProfile::automotive() {
  return PeriodProfile{{
      {1, 4, 0.34, 5.00, 30.11, 0.19, 0.92, 1.30, 29.11, 0.75, 0.80},
      {2, 2, 0.32, 4.20, 40.69, 0.12, 0.89, 1.54, 19.04, 0.75, 0.80},
      {5, 2, 0.36, 11.04, 83.36, 0.17, 0.94, 1.13, 18.44, 0.75, 0.80},
      {10, 29, 0.21, 10.09, 309.87, 0.05, 0.99, 1.06, 30.03, 0.67, 0.75},
      {20, 29, 0.25, 8.74, 291.42, 0.11, 0.98, 1.06, 15.61, 0.67, 0.75},
      {50, 4, 0.29, 17.56, 92.98, 0.32, 0.95, 1.13, 7.76, 0.67, 0.75},
      {100, 24, 0.21, 10.53, 420.43, 0.09, 0.99, 1.02, 8.88, 0.50, 0.67},
      {200, 1, 0.22, 2.56, 21.95, 0.45, 0.98, 1.03, 4.90, 0.50, 0.67},
      {1000, 5, 0.37, 0.43, 0.46, 0.68, 0.80, 1.84, 4.75, 0.50, 0.67},
  }};
}

const PeriodRow& PeriodProfile::row(SimTime period) const {
  for (const auto& r : rows) {
    if (SimTime::from_ms(r.period_ms) == period) return r;
  }
  throw std::out_of_range("no profile row for period " + to_string(period) + " ticks");
}

void GeneratorConfig::check() const {
  if (num_runnables == 0) throw std::invalid_argument("num_runnables must be positive");
  if (!(criticality_split >= 0.0 && criticality_split <= 1.0)) {
    throw std::invalid_argument("criticality_split must lie in [0, 1]");
  }
  if (quantile_samples == 0) throw std::invalid_argument("quantile_samples must be positive");
  if (uunifast_retry_cap == 0) throw std::invalid_argument("uunifast_retry_cap must be positive");
}

RetryExhausted::RetryExhausted(SimTime p, std::uint32_t attempts)
    : std::runtime_error("UUniFast retries exhausted (" + std::to_string(attempts) + ") for the " +
                         std::to_string(p.ticks() / SimTime::kTicksPerMilli) + " ms runnable group"),
      period(p) {}

std::vector<SimTime> sample_runnable_periods(std::uint32_t n, const PeriodProfile& profile, Rng& rng) {
  if (n == 0) throw std::invalid_argument("at least one runnable is required");
  std::uint32_t total = 0;
  for (const auto& r : profile.rows) total += r.share_percent;
  std::vector<SimTime> out;
  out.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    auto draw = static_cast<std::uint32_t>(uniform_index(rng, total));
    for (const auto& r : profile.rows) {
      if (draw < r.share_percent) {
        out.push_back(SimTime::from_ms(r.period_ms));
        break;
      }
      draw -= r.share_percent;
    }
  }
  return out;
}

std::vector<double> uunifast(std::uint32_t n, double total, Rng& rng) {
  if (n == 0) throw std::invalid_argument("uunifast needs n >= 1");
  if (!(total > 0.0)) throw std::invalid_argument("uunifast needs a positive total");
  std::vector<double> out(n);
  double sum = total;
  for (std::uint32_t i = 1; i < n; ++i) {
    const double next = sum * std::pow(uniform_open01(rng), 1.0 / static_cast<double>(n - i));
    out[i - 1] = sum - next;
    sum = next;
  }
  out[n - 1] = sum;
  return out;
}

std::vector<double> bounded_fixed_sum(std::uint32_t n, double total, double lo, double hi, Rng& rng) {
  if (n == 0) throw std::invalid_argument("bounded_fixed_sum needs n >= 1");
  if (!(hi > lo)) throw std::invalid_argument("bounded_fixed_sum needs lo < hi");
  const double width = hi - lo;
  double s = (total - n * lo) / width;
  if (s < -1e-9 || s > n + 1e-9) throw std::invalid_argument("bounded_fixed_sum: total outside [n*lo, n*hi]");

  const int k = std::max(std::min(static_cast<int>(std::floor(s)), static_cast<int>(n) - 1), 0);
  s = std::max(std::min(s, k + 1.0), static_cast<double>(k));
  std::vector<double> s1(n), s2(n);
  for (std::uint32_t q = 0; q < n; ++q) {
    s1[q] = s - (k - static_cast<double>(q));
    s2[q] = (k + static_cast<double>(n) - q) - s;
  }

  // w[i][c] carries scaled simplex volumes; t[i][c] the transition table.
  const double tiny = std::numeric_limits<double>::denorm_min();
  std::vector<std::vector<double>> w(n, std::vector<double>(n + 1, 0.0));
  std::vector<std::vector<double>> t(n > 1 ? n - 1 : 0, std::vector<double>(n, 0.0));
  w[0][1] = std::numeric_limits<double>::max();
  for (std::uint32_t i = 2; i <= n; ++i) {
    for (std::uint32_t c = 0; c < i; ++c) {
      const double tmp1 = w[i - 2][c + 1] * s1[c] / i;
      const double tmp2 = w[i - 2][c] * s2[n - i + c] / i;
      w[i - 1][c + 1] = tmp1 + tmp2;
      const double tmp3 = w[i - 1][c + 1] + tiny;
      t[i - 2][c] = s2[n - i + c] > s1[c] ? tmp2 / tmp3 : 1.0 - tmp1 / tmp3;
    }
  }

  std::vector<double> x(n);
  int j = k + 1;
  double sm = 0.0, pr = 1.0;
  for (std::uint32_t i = n - 1; i >= 1; --i) {
    const double e = uniform01(rng) <= t[i - 1][j - 1] ? 1.0 : 0.0;
    const double sx = std::pow(uniform01(rng), 1.0 / i);
    sm += (1.0 - sx) * pr * s / (i + 1);
    pr *= sx;
    x[n - i - 1] = sm + pr * e;
    s -= e;
    j -= static_cast<int>(e);
  }
  x[n - 1] = sm + pr * s;

  // Random permutation, then back to [lo, hi].
  for (std::uint32_t i = n; i > 1; --i) std::swap(x[i - 1], x[uniform_index(rng, i)]);
  for (auto& v : x) v = lo + width * std::clamp(v, 0.0, 1.0);
  return x;
}

std::vector<SimTime> assign_acets(const std::vector<SimTime>& periods, const PeriodProfile& profile, Rng& rng,
                                  const GeneratorConfig& cfg) {
  std::map<SimTime, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < periods.size(); ++i) groups[periods[i]].push_back(i);

  std::vector<SimTime> acets(periods.size());
  for (const auto& [period, members] : groups) {
    const PeriodRow& row = profile.row(period);
    const SimTime lo = SimTime::from_us_real(row.acet_min_us);
    const SimTime hi = SimTime::from_us_real(row.acet_max_us);
    const auto r = static_cast<std::uint32_t>(members.size());
    const double period_ticks = static_cast<double>(period.ticks());
    const double total_util = r * static_cast<double>(SimTime::from_us_real(row.acet_avg_us).ticks()) / period_ticks;

    auto to_ticks = [&](double util) { return SimTime{static_cast<SimTime::rep>(std::llround(util * period_ticks))}; };

    bool accepted = false;
    for (std::uint32_t attempt = 0; attempt < cfg.uunifast_retry_cap && !accepted; ++attempt) {
      const auto utils = uunifast(r, total_util, rng);
      accepted = std::all_of(utils.begin(), utils.end(), [&](double u) {
        const SimTime a = to_ticks(u);
        return lo <= a && a <= hi;
      });
      if (accepted) {
        for (std::uint32_t k = 0; k < r; ++k) acets[members[k]] = to_ticks(utils[k]);
      }
    }
    if (accepted) continue;
    if (!cfg.bounded_fallback) throw RetryExhausted(period, cfg.uunifast_retry_cap);
    const auto values = bounded_fixed_sum(r, total_util * period_ticks, static_cast<double>(lo.ticks()),
                                          static_cast<double>(hi.ticks()), rng);
    for (std::uint32_t k = 0; k < r; ++k) {
      acets[members[k]] = std::clamp(SimTime{static_cast<SimTime::rep>(std::llround(values[k]))}, lo, hi);
    }
  }
  return acets;
}

namespace {

constexpr double kRoundingSlack = 1e-9;

SimTime::rep floor_ticks(double x) { return static_cast<SimTime::rep>(std::floor(x + kRoundingSlack)); }
SimTime::rep ceil_ticks(double x) { return static_cast<SimTime::rep>(std::ceil(x - kRoundingSlack)); }

}  // namespace

std::pair<SimTime, SimTime> derive_bcet_wcet(SimTime acet, SimTime period, const PeriodProfile& profile, Rng& rng) {
  if (acet < SimTime{2}) throw std::invalid_argument("ACET must be at least 2 ticks");
  const PeriodRow& row = profile.row(period);
  const auto a = static_cast<double>(acet.ticks());

  // Rounded to the tick but kept inside the factor range and strictly
  // around the ACET.
  const SimTime::rep b_lo = std::max<SimTime::rep>(1, ceil_ticks(a * row.bcet_factor_min));
  const SimTime::rep b_hi = std::min<SimTime::rep>(acet.ticks() - 1, floor_ticks(a * row.bcet_factor_max));
  const SimTime::rep w_lo = std::max<SimTime::rep>(acet.ticks() + 1, ceil_ticks(a * row.wcet_factor_min));
  const SimTime::rep w_hi = floor_ticks(a * row.wcet_factor_max);
  if (b_lo > b_hi || w_lo > w_hi) {
    throw std::invalid_argument("ACET of " + to_string(acet) + " ticks too small for the factor ranges");
  }
  const double fb = uniform_real(rng, row.bcet_factor_min, row.bcet_factor_max);
  const double fw = uniform_real(rng, row.wcet_factor_min, row.wcet_factor_max);
  const auto bcet = std::clamp<SimTime::rep>(static_cast<SimTime::rep>(std::llround(a * fb)), b_lo, b_hi);
  const auto wcet = std::clamp<SimTime::rep>(static_cast<SimTime::rep>(std::llround(a * fw)), w_lo, w_hi);
  return {SimTime{bcet}, SimTime{wcet}};
}

WeibullParams fit_weibull_anchored(SimTime location, double mean_offset, double low_offset, double low_p,
                                   double high_offset, double high_p) {
  if (!(low_p > 0.0 && low_p < high_p && high_p < 1.0)) throw InfeasibleFit("anchor probabilities out of order");
  if (!(low_offset > 0.0 && high_offset > low_offset)) {
    throw InfeasibleFit("quantile anchors must satisfy 0 < low < high");
  }
  if (!(mean_offset > 0.0)) throw InfeasibleFit("mean must lie above the location");
  // Q(p) = scale * (-ln(1-p))^(1/shape), so the anchor ratio fixes the shape.
  const double log_lo = -std::log1p(-low_p);
  const double log_hi = -std::log1p(-high_p);
  const double shape = std::log(log_hi / log_lo) / std::log(high_offset / low_offset);
  const double scale = mean_offset / std::tgamma(1.0 + 1.0 / shape);
  if (!std::isfinite(shape) || !std::isfinite(scale) || !(shape > 0.0) || !(scale > 0.0)) {
    throw InfeasibleFit("no positive shape satisfies the anchors");
  }
  return WeibullParams{shape, scale, location};
}

WeibullParams fit_weibull(SimTime bcet, SimTime acet, SimTime wcet) {
  if (!(bcet < acet && acet < wcet)) throw InfeasibleFit("fit requires bcet < acet < wcet");
  return fit_weibull_anchored(bcet, static_cast<double>((acet - bcet).ticks()), 1.0, kFitLowProbability,
                              static_cast<double>((wcet - bcet).ticks()), kFitHighProbability);
}

SimTime sample_weibull(const WeibullParams& params, Rng& rng) {
  const double offset = params.offset_quantile(uniform_open01(rng));
  if (!(offset < 0x1.0p62)) throw TimeOverflowError("Weibull sample out of range");
  return params.location + SimTime{static_cast<SimTime::rep>(std::llround(offset))};
}

SimTime sample_task_execution(const Task& task, Rng& rng) {
  SimTime total;
  for (const auto& r : task.runnables) total += min(sample_weibull(r.weibull, rng), r.wcet);
  return total;
}

SimTime empirical_quantile(std::vector<SimTime> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("empirical quantile of an empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  auto position = static_cast<std::size_t>(std::ceil(p * n - kRoundingSlack));
  position = std::clamp<std::size_t>(position, 1, samples.size());
  return samples[position - 1];
}

SimTime estimate_lo_budget(const Task& task, const PeriodProfile& profile, Rng& rng, std::uint32_t samples) {
  if (task.runnables.empty()) throw std::invalid_argument("budget estimation needs at least one runnable");
  const PeriodRow& row = profile.row(task.period);
  const double p = task.is_hi() ? row.lo_quantile_hi_task : row.lo_quantile_lo_task;
  std::vector<SimTime> draws;
  draws.reserve(samples);
  for (std::uint32_t k = 0; k < samples; ++k) draws.push_back(sample_task_execution(task, rng));
  return max(empirical_quantile(std::move(draws), p), SimTime::tick());
}

std::vector<Runnable> generate_runnables(const GeneratorConfig& cfg, const PeriodProfile& profile) {
  cfg.check();
  Rng period_rng = make_stream(cfg.seed, "periods");
  Rng crit_rng = make_stream(cfg.seed, "criticality");
  Rng acet_rng = make_stream(cfg.seed, "acet");
  Rng factor_rng = make_stream(cfg.seed, "factors");

  const auto periods = sample_runnable_periods(cfg.num_runnables, profile, period_rng);
  std::vector<Runnable> runnables(periods.size());
  for (std::size_t i = 0; i < periods.size(); ++i) {
    runnables[i].period = periods[i];
    runnables[i].criticality =
        uniform01(crit_rng) < cfg.criticality_split ? CriticalityLevel::HI : CriticalityLevel::LO;
  }
  const auto acets = assign_acets(periods, profile, acet_rng, cfg);
  for (std::size_t i = 0; i < runnables.size(); ++i) {
    auto& r = runnables[i];
    r.acet = acets[i];
    std::tie(r.bcet, r.wcet) = derive_bcet_wcet(r.acet, r.period, profile, factor_rng);
    r.weibull = fit_weibull(r.bcet, r.acet, r.wcet);
  }
  return runnables;
}

TaskSet build_tasks(const std::vector<Runnable>& runnables, const PeriodProfile& profile,
                    const GeneratorConfig& cfg) {
  std::map<std::pair<SimTime, CriticalityLevel>, std::vector<Runnable>> groups;
  for (const auto& r : runnables) groups[{r.period, r.criticality}].push_back(r);

  TaskSet ts;
  ts.agent_task = default_agent_task();
  for (auto& [key, members] : groups) {
    Task t;
    t.id = ts.tasks.size();
    t.period = key.first;
    t.deadline = key.first;
    t.criticality = key.second;
    t.runnables = std::move(members);
    if (t.is_hi()) t.c_hi = t.wcet_sum();
    Rng budget_rng = make_stream(cfg.seed, "lo-budget", t.id);
    t.c_lo = estimate_lo_budget(t, profile, budget_rng, cfg.quantile_samples);
    ts.tasks.push_back(std::move(t));
  }
  analysis::assign_priorities(ts, cfg.priority_policy);
  check_invariants(ts);
  return ts;
}

TaskSet generate_taskset(const GeneratorConfig& cfg) {
  const PeriodProfile profile = PeriodProfile::automotive();
  return build_tasks(generate_runnables(cfg, profile), profile, cfg);
}

AgentTaskSpec default_agent_task() {
  // Measured agent timing: BCET 750 us, ACET 1200 us, 760 us at
  // p = 0.000001 and 2000 us at p = 0.99999.
  const SimTime bcet = SimTime::from_us(750);
  const double mean = static_cast<double>((SimTime::from_us(1200) - bcet).ticks());
  const double low = static_cast<double>((SimTime::from_us(760) - bcet).ticks());
  const double high = static_cast<double>((SimTime::from_us(2000) - bcet).ticks());
  AgentTaskSpec spec;
  spec.min_interarrival = SimTime::from_ms(10);
  spec.weibull = fit_weibull_anchored(bcet, mean, low, 0.000001, high, kFitHighProbability);
  return spec;
}

}  // namespace mcs::workload
