// Acceptance checks 1-9. `acceptance N` runs one criterion, no argument runs
// all; each prints one PASS/FAIL line.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "dqn_checks.hpp"
#include "mcs/analysis.hpp"
#include "mcs/experiment.hpp"
#include "mcs/sim.hpp"
#include "mcs/workload.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mcs;
using namespace mcs::testing;

namespace {

// Tolerances and sizes.
constexpr int kC1Sets = 200;
constexpr int kC2Sets = 50;
constexpr int kC2Configs = 1000;
constexpr std::uint32_t kC2Runnables = 60;
constexpr std::uint64_t kC2SimSeconds = 100;
constexpr double kC2ScaleLo = 0.5, kC2ScaleHi = 1.5;
constexpr std::uint32_t kC3Sets = 10;
constexpr std::uint32_t kC3Runnables = 150;
constexpr double kC3Threshold = 1.5;
constexpr std::uint32_t kC3Required = 8;
constexpr double kC4Step = 1e-5;
constexpr double kC4MaxRelError = 1e-4;
constexpr std::size_t kC4Window = 50;
constexpr int kC5Triples = 1000;
constexpr double kC5RelTol = 1e-3;
constexpr std::uint64_t kC6Runnables = 1'000'000;
constexpr double kC6ShareTol = 0.005;
constexpr double kC6HiTol = 0.01;
constexpr int kC8Sets = 1000;
constexpr std::uint32_t kC9SetsPerPoint = 10;
constexpr double kC9LowEnd = 0.9, kC9HighEnd = 0.1, kC9MaxRise = 0.2;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- 1 -----------------------------------------------------------------------

Outcome criterion1() {
  Rng rng(derive_seed(1, "acceptance-1"));
  std::size_t mismatches = 0, compared = 0, sim_checked = 0, sim_mismatch = 0;
  const std::uint64_t step = SimTime::kTicksPerMilli;
  for (int k = 0; k < kC1Sets; ++k) {
    const auto ts = random_small_set(rng, 3 + uniform_index(rng, 4));
    const auto result = analysis::amc_rtb_test(ts);
    for (const auto& t : ts.tasks) {
      const auto lo = oracle::r_lo(ts, t.id, step);
      ++compared;
      if (lo.has_value() != result.r_lo[t.id].has_value() || (lo && result.r_lo[t.id]->ticks() != *lo)) {
        ++mismatches;
        continue;
      }
      if (t.is_hi() && lo) {
        const auto star = oracle::r_star(ts, t.id, *lo, step);
        ++compared;
        if (star.has_value() != result.r_star[t.id].has_value() || (star && result.r_star[t.id]->ticks() != *star)) {
          ++mismatches;
        }
      }
    }

    // Synchronous release, every job runs exactly its budget.
    const TaskId lowest = ts.by_priority().back();
    if (!result.r_lo[lowest]) continue;
    sim::SimConfig cfg;
    cfg.duration = ts[lowest].deadline;
    cfg.trace = true;
    cfg.exec_override = [](const Task& t, std::uint64_t, Rng&) { return t.c_lo; };
    const auto run = sim::run(ts, cfg);
    ++sim_checked;
    std::optional<SimTime> first;
    for (const auto& r : run.trace) {
      if (r.kind == sim::EventKind::JobCompletion && r.task == lowest) {
        first = r.time;
        break;
      }
    }
    if (first != result.r_lo[lowest]) ++sim_mismatch;
  }
  return {mismatches == 0 && sim_mismatch == 0 && sim_checked > 0,
          fmt("%zu fixed points compared, %zu mismatches; %zu simulated first responses, %zu mismatches", compared,
              mismatches, sim_checked, sim_mismatch)};
}

// --- 2 -----------------------------------------------------------------------

Outcome criterion2() {
  std::size_t sets = 0, accepted = 0, hi_misses = 0, lo_misses = 0, violating_runs = 0;
  std::uint64_t lo_completions = 0;
  for (std::uint64_t seed = 1; sets < kC2Sets; ++seed) {
    workload::GeneratorConfig g;
    g.seed = derive_seed(2, "acceptance-2", seed);
    g.num_runnables = kC2Runnables;
    const auto ts = workload::generate_taskset(g);
    const auto result = analysis::amc_rtb_test(ts);
    if (!result.schedulable) continue;
    ++sets;
    const auto tables = analysis::precompute_ceilings(ts, result);
    Rng rng(g.seed);
    for (int k = 0; k < kC2Configs; ++k) {
      BudgetConfiguration b = BudgetConfiguration::design(ts);
      for (TaskId i = 0; i < ts.size(); ++i) {
        const SimTime cap = ts[i].c_hi ? *ts[i].c_hi : ts[i].wcet_sum();
        const double v = static_cast<double>(ts[i].c_lo.ticks()) * uniform_real(rng, kC2ScaleLo, kC2ScaleHi);
        b.set(i, SimTime{std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(v)), 1, cap.ticks())});
      }
      if (!analysis::validate_configuration(b, tables).valid()) continue;
      ++accepted;
      sim::SimConfig cfg;
      cfg.duration = SimTime::from_seconds(kC2SimSeconds);
      cfg.seed = derive_seed(g.seed, "c2-run", static_cast<std::uint64_t>(k));
      cfg.cap_hi_at_c_hi = true;
      cfg.initial_budgets = b;
      const auto m = sim::run(ts, cfg).metrics;
      hi_misses += m.hi_deadline_misses;
      lo_misses += m.lo_deadline_misses;
      lo_completions += m.completions;
      if (m.deadline_misses) ++violating_runs;
    }
  }
  return {hi_misses == 0 && lo_misses == 0 && accepted > 0,
          fmt("%zu sets x %d configurations, %zu accepted and simulated %llu s each; HI misses %zu, LO misses %zu, "
              "runs with misses %zu",
              sets, kC2Configs, accepted, static_cast<unsigned long long>(kC2SimSeconds), hi_misses, lo_misses, violating_runs)};
}

// --- 3 -----------------------------------------------------------------------

Outcome criterion3() {
  experiment::ExperimentConfig cfg;
  cfg.generator.num_runnables = kC3Runnables;
  cfg.num_tasksets = kC3Sets;
  cfg.train_duration_s = 100.0;
  cfg.eval_duration_s = 200.0;
  const auto result = experiment::run_pipeline(cfg);
  std::uint32_t good = 0;
  std::ostringstream per;
  for (const auto& s : result.report.sets) {
    auto ok = [](const experiment::Ratio& r) {
      return r.kind == experiment::Ratio::Kind::Infinite ||
             (r.kind == experiment::Ratio::Kind::Finite && r.value >= kC3Threshold);
    };
    if (ok(s.mode_changes) && ok(s.lo_kills)) ++good;
    per << " " << s.mode_changes.str() << "/" << s.lo_kills.str();
  }
  return {good >= kC3Required,
          fmt("%u of %u sets reach both ratios >= %.1f (need %u); mode-change/kill ratios:", good, kC3Sets,
              kC3Threshold, kC3Required) +
              per.str()};
}

// --- 4 -----------------------------------------------------------------------

Outcome criterion4() {
  double worst = 0.0;
  bool monotone = true;
  for (auto shape : {dqn::HiddenShape::Half, dqn::HiddenShape::FullHalf, dqn::HiddenShape::FullHalfQuarter}) {
    for (std::size_t n : {3u, 8u, 18u}) {
      worst = std::max(worst, dqn_checks::max_gradient_error(n, shape, 400 + n, kC4Step));
    }
    const auto losses = dqn_checks::repeated_transition_losses(10, shape, 500, 41);
    monotone = monotone && dqn_checks::windows_decrease(losses, kC4Window);
  }
  return {worst < kC4MaxRelError && monotone,
          fmt("max relative gradient error %.3g (limit %.0e); gamma=0 loss decreasing over every %zu-step window: %s",
              worst, kC4MaxRelError, kC4Window, monotone ? "yes" : "no")};
}

// --- 5 -----------------------------------------------------------------------

Outcome criterion5() {
  const auto profile = workload::PeriodProfile::automotive();
  Rng rng(derive_seed(5, "acceptance-5"));
  int ok = 0, low_ok = 0, high_ok = 0, mean_ok = 0;
  double worst_low = 0, worst_high = 0, worst_mean = 0;
  for (int k = 0; k < kC5Triples; ++k) {
    const auto& row = profile.rows[uniform_index(rng, profile.rows.size())];
    const SimTime period = SimTime::from_ms(row.period_ms);
    const SimTime lo = SimTime::from_us_real(row.acet_min_us), hi = SimTime::from_us_real(row.acet_max_us);
    const SimTime acet{lo.ticks() + uniform_index(rng, hi.ticks() - lo.ticks() + 1)};
    const auto [bcet, wcet] = workload::derive_bcet_wcet(acet, period, profile, rng);
    const auto w = workload::fit_weibull(bcet, acet, wcet);
    const double e_low = std::abs(w.offset_quantile(workload::kFitLowProbability) - 1.0) / 1.0;
    const double target_high = static_cast<double>((wcet - bcet).ticks());
    const double e_high = std::abs(w.offset_quantile(workload::kFitHighProbability) - target_high) / target_high;
    const double e_mean = std::abs(w.mean() - static_cast<double>(acet.ticks())) / static_cast<double>(acet.ticks());
    worst_low = std::max(worst_low, e_low);
    worst_high = std::max(worst_high, e_high);
    worst_mean = std::max(worst_mean, e_mean);
    low_ok += e_low <= kC5RelTol;
    high_ok += e_high <= kC5RelTol;
    mean_ok += e_mean <= kC5RelTol;
    ok += e_low <= kC5RelTol && e_high <= kC5RelTol && e_mean <= kC5RelTol;
  }
  return {ok == kC5Triples,
          fmt("%d/%d triples meet all three targets; low quantile %d (worst %.3g), high quantile %d (worst %.3g), "
              "mean %d (worst %.3g)",
              ok, kC5Triples, low_ok, worst_low, high_ok, worst_high, mean_ok, worst_mean)};
}

// --- 6 -----------------------------------------------------------------------

Outcome criterion6() {
  const auto profile = workload::PeriodProfile::automotive();
  std::map<std::uint32_t, std::uint64_t> per_period;
  std::uint64_t total = 0, hi = 0, acet_bad = 0, factor_bad = 0;
  const double slack = 1e-9;
  for (std::uint64_t chunk = 0; total < kC6Runnables; ++chunk) {
    workload::GeneratorConfig g;
    g.seed = derive_seed(6, "acceptance-6", chunk);
    g.num_runnables = static_cast<std::uint32_t>(std::min<std::uint64_t>(150, kC6Runnables - total));
    for (const auto& r : workload::generate_runnables(g, profile)) {
      const auto& row = profile.row(r.period);
      ++per_period[row.period_ms];
      ++total;
      hi += r.criticality == CriticalityLevel::HI;
      if (r.acet < SimTime::from_us_real(row.acet_min_us) || r.acet > SimTime::from_us_real(row.acet_max_us)) ++acet_bad;
      const double a = static_cast<double>(r.acet.ticks());
      const double fb = static_cast<double>(r.bcet.ticks()) / a, fw = static_cast<double>(r.wcet.ticks()) / a;
      if (fb < row.bcet_factor_min - slack || fb > row.bcet_factor_max + slack || fw < row.wcet_factor_min - slack ||
          fw > row.wcet_factor_max + slack) {
        ++factor_bad;
      }
    }
  }
  double worst_share = 0.0;
  for (const auto& row : profile.rows) {
    const double share = static_cast<double>(per_period[row.period_ms]) / static_cast<double>(total);
    worst_share = std::max(worst_share, std::abs(share - row.share_percent / 100.0));
  }
  const double hi_frac = static_cast<double>(hi) / static_cast<double>(total);
  const bool pass = worst_share <= kC6ShareTol && std::abs(hi_frac - 0.5) <= kC6HiTol && acet_bad == 0 && factor_bad == 0;
  return {pass, fmt("%llu runnables; worst share deviation %.4f; HI fraction %.4f; ACET out of bounds %llu; "
                    "factors out of range %llu",
                    static_cast<unsigned long long>(total), worst_share, hi_frac,
                    static_cast<unsigned long long>(acet_bad), static_cast<unsigned long long>(factor_bad))};
}

// --- 7 -----------------------------------------------------------------------

std::string trace_text(const TaskSet& ts, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.duration = SimTime::from_seconds(5);
  cfg.seed = seed;
  cfg.trace = true;
  std::ostringstream os;
  sim::write_trace(os, sim::run(ts, cfg).trace);
  return os.str();
}

Outcome criterion7() {
  workload::GeneratorConfig g;
  g.seed = 7;
  const auto ts = workload::generate_taskset(g);
  const auto a = trace_text(ts, 3), b = trace_text(ts, 3), c = trace_text(ts, 4);
  const bool identical = a == b && !a.empty();
  const bool seed_matters = a != c;

  // Task 0 (priority 1) is armed before task 1 (priority 0); both arrive at 0.
  // Task 1 completes at 5 ms exactly when its next job arrives.
  const auto small = make_set({make_task(0, ms(10), ms(2), std::nullopt, 1), make_task(1, ms(5), ms(5), std::nullopt, 0)});
  sim::SimConfig cfg;
  cfg.duration = ms(10);
  cfg.trace = true;
  cfg.exec_override = [](const Task& t, std::uint64_t, Rng&) { return t.id == 1 ? ms(2) : ms(1); };
  const auto tr = sim::run(small, cfg).trace;
  auto at = [&](std::size_t k, std::uint64_t t_ms, sim::EventKind kind, TaskId task) {
    return k < tr.size() && tr[k].time == ms(t_ms) && tr[k].kind == kind && tr[k].task == task;
  };
  using K = sim::EventKind;
  const bool prio_order = at(0, 0, K::JobArrival, 1) && at(1, 0, K::JobArrival, 0);

  const auto tie = make_set({make_task(0, ms(5), ms(5), std::nullopt, 0)});
  sim::SimConfig tcfg;
  tcfg.duration = ms(10);
  tcfg.trace = true;
  tcfg.exec_override = [](const Task&, std::uint64_t, Rng&) { return ms(5); };
  const auto tt = sim::run(tie, tcfg).trace;
  const bool term_first = tt.size() >= 3 && tt[1].kind == K::JobCompletion && tt[2].kind == K::JobArrival &&
                          tt[1].time == ms(5) && tt[2].time == ms(5);

  sim::EventQueue q;
  sim::Event arrival;
  arrival.time = SimTime{100};
  arrival.priority = 3;
  q.push(arrival);
  sim::Event overrun = arrival;
  overrun.kind = K::BudgetOverrun;
  q.push(overrun);
  const bool queue_first = q.pop().kind == K::BudgetOverrun;

  return {identical && seed_matters && prio_order && term_first && queue_first,
          fmt("identical logs %s (%zu bytes); seeds differ %s; priority-ordered arrivals %s; termination before "
              "arrival %s/%s",
              identical ? "yes" : "no", a.size(), seed_matters ? "yes" : "no", prio_order ? "yes" : "no",
              term_first ? "yes" : "no", queue_first ? "yes" : "no")};
}

// --- 8 -----------------------------------------------------------------------

Outcome criterion8() {
  Rng rng(derive_seed(8, "acceptance-8"));
  std::size_t over = 0, disagree = 0, exhaustive = 0, feasible = 0;
  for (int k = 0; k < kC8Sets; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    const auto ts = random_small_set(rng, n);
    const auto a = analysis::audsley_assign(ts);
    if (a.tests > 2 * n - 1) ++over;
    feasible += a.feasible();
    if (n <= 6) {
      ++exhaustive;
      if (a.feasible() != oracle::any_order_schedulable(ts, SimTime::kTicksPerMilli)) ++disagree;
    }
  }
  return {over == 0 && disagree == 0,
          fmt("%d sets (%zu feasible): %zu exceed 2n-1 tests; %zu exhaustive comparisons, %zu disagreements", kC8Sets,
              feasible, over, exhaustive, disagree)};
}

// --- 9 -----------------------------------------------------------------------

Outcome criterion9() {
  experiment::ExperimentConfig cfg;
  cfg.sets_per_point = kC9SetsPerPoint;
  const auto points = experiment::cmd_sweep(cfg);
  std::ostringstream curve;
  bool transition = false;
  double max_rise = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double f = points[k].fraction();
    curve << " " << points[k].runnables << ":" << f;
    transition = transition || (f > 0.0 && f < 1.0);
    if (k) max_rise = std::max(max_rise, f - points[k - 1].fraction());
  }
  const bool ends = !points.empty() && points.front().fraction() >= kC9LowEnd && points.back().fraction() <= kC9HighEnd;
  return {ends && transition && max_rise <= kC9MaxRise,
          fmt("ends %s, transition region %s, largest rise %.2f;", ends ? "ok" : "wrong", transition ? "yes" : "no",
              max_rise) +
              curve.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [k, _] : criteria) selected.push_back(k);
  }
  bool all = true;
  for (int k : selected) {
    auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << o.detail << fmt(" [%.1f s]", secs)
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
