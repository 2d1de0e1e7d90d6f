#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "mcs/model.hpp"
#include "mcs/rng.hpp"
#include "mcs/taskset_io.hpp"
#include "mcs/workload.hpp"
#include "support.hpp"

using namespace mcs;
using namespace mcs::testing;

TEST_CASE("time units convert exactly to ticks") {
  CHECK(SimTime::from_ms(1).ticks() == 100'000);
  CHECK(SimTime::from_us(1).ticks() == 100);
  CHECK(SimTime::from_seconds(1).ticks() == 100'000'000);
  CHECK(SimTime::from_us_real(10.09).ticks() == 1009);
  CHECK(SimTime::from_us_real(0.005).ticks() == 1);
  CHECK(to_string(ms(3)) == to_string(us(3000)));
}

TEST_CASE("time arithmetic is checked") {
  CHECK_THROWS_AS(SimTime::max() + SimTime::tick(), TimeOverflowError);
  CHECK_THROWS_AS(SimTime::zero() - SimTime::tick(), TimeOverflowError);
  CHECK_THROWS_AS(SimTime::max() * 2, TimeOverflowError);
  CHECK_THROWS_AS(SimTime::from_seconds(std::numeric_limits<std::uint64_t>::max() / 1000), TimeOverflowError);
  CHECK((ms(3) - ms(1)) == ms(2));
  CHECK(ceil_div(ms(5), ms(5)) == 1);
  CHECK(ceil_div(ms(5) + SimTime::tick(), ms(5)) == 2);
  CHECK(ceil_div(SimTime::zero(), ms(5)) == 0);
  CHECK_THROWS(ceil_div(ms(1), SimTime::zero()));
}

TEST_CASE("utilization is exact") {
  SUBCASE("single task C=5ms T=10ms") {
    const auto ts = make_set({make_task(0, ms(10), ms(5), std::nullopt, 0)});
    CHECK(utilization(ts, CriticalityLevel::LO) == Rational(1, 2));
    CHECK(utilization(ts, CriticalityLevel::HI) == 0);
  }
  SUBCASE("empty set") { CHECK(utilization(make_set({}), CriticalityLevel::LO) == 0); }
  SUBCASE("thirds do not round") {
    const auto ts = make_set({make_task(0, ms(3), ms(1), ms(2), 0), make_task(1, ms(3), ms(1), ms(1), 1),
                              make_task(2, ms(3), ms(1), std::nullopt, 2)});
    CHECK(utilization(ts, CriticalityLevel::LO) == 1);
    CHECK(utilization(ts, CriticalityLevel::HI) == 1);
  }
  SUBCASE("generated set against a long-double summation") {
    workload::GeneratorConfig cfg;
    cfg.seed = 7;
    const auto ts = workload::generate_taskset(cfg);
    long double lo = 0, hi = 0;
    for (const auto& t : ts.tasks) {
      lo += static_cast<long double>(t.c_lo.ticks()) / t.period.ticks();
      if (t.c_hi) hi += static_cast<long double>(t.c_hi->ticks()) / t.period.ticks();
    }
    CHECK(static_cast<long double>(utilization(ts, CriticalityLevel::LO)) == doctest::Approx(static_cast<double>(lo)).epsilon(1e-15));
    CHECK(static_cast<double>(utilization(ts, CriticalityLevel::HI)) == doctest::Approx(static_cast<double>(hi)).epsilon(1e-15));
  }
}

TEST_CASE("task invariants") {
  CHECK_NOTHROW(check_invariants(make_task(0, ms(10), ms(1), ms(2), 0)));
  auto t = make_task(0, ms(10), ms(1), std::nullopt, 0);
  t.deadline = ms(9);
  CHECK_THROWS_AS(check_invariants(t), InvariantViolation);
  CHECK_THROWS_AS(check_invariants(make_task(0, ms(10), ms(3), ms(2), 0)), InvariantViolation);
  auto lo = make_task(0, ms(10), ms(1), std::nullopt, 0);
  lo.c_hi = ms(2);
  CHECK_THROWS_AS(check_invariants(lo), InvariantViolation);
  CHECK_THROWS_AS(check_invariants(make_task(0, ms(10), SimTime::zero(), std::nullopt, 0)), InvariantViolation);

  auto ts = make_set({make_task(0, ms(10), ms(1), std::nullopt, 0), make_task(1, ms(20), ms(1), std::nullopt, 0)});
  CHECK_THROWS_WITH_AS(check_invariants(ts), doctest::Contains("priority"), InvariantViolation);
  ts.tasks[1].priority = 1;
  CHECK_NOTHROW(check_invariants(ts));
  ts.tasks[1].period = ts.tasks[1].deadline = ms(10);
  CHECK_NOTHROW(check_invariants(ts));
  CHECK_THROWS_AS(check_automotive_layout(ts), InvariantViolation);
}

TEST_CASE("budget configurations stay positive") {
  const auto ts = make_set({make_task(0, ms(10), ms(1), std::nullopt, 0), make_task(1, ms(20), ms(2), ms(3), 1)});
  auto b = BudgetConfiguration::design(ts);
  CHECK(b[0] == ms(1));
  CHECK(b[1] == ms(2));
  CHECK_THROWS(b.set(0, SimTime::zero()));
  CHECK_THROWS(BudgetConfiguration({ms(1), SimTime::zero()}));
  b.set(1, ms(5));
  CHECK(b[1] == ms(5));
}

TEST_CASE("random streams are deterministic and independent") {
  Rng a = make_stream(42, "exec", 3);
  Rng b = make_stream(42, "exec", 3);
  Rng c = make_stream(42, "exec", 4);
  Rng d = make_stream(42, "periods", 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK((u >= 0.0 && u < 1.0));
    const double v = uniform_open01(r);
    CHECK((v > 0.0 && v < 1.0));
    CHECK(uniform_index(r, 7) < 7);
  }
}

TEST_CASE("task-set documents round-trip") {
  workload::GeneratorConfig cfg;
  cfg.seed = 11;
  const TaskSet ts = workload::generate_taskset(cfg);
  const std::string doc = serialize_taskset(ts);
  const TaskSet back = deserialize_taskset(doc);
  CHECK(back == ts);
  CHECK(serialize_taskset(back) == doc);
  // Weibull parameters survive bit for bit.
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t r = 0; r < ts[i].runnables.size(); ++r) {
      const auto& w0 = ts[i].runnables[r].weibull;
      const auto& w1 = back[i].runnables[r].weibull;
      CHECK(std::memcmp(&w0.shape, &w1.shape, sizeof(double)) == 0);
      CHECK(std::memcmp(&w0.scale, &w1.scale, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("task-set parse errors carry context") {
  const auto ts = make_set({make_task(0, ms(10), ms(1), ms(2), 0)});
  const std::string doc = serialize_taskset(ts);

  CHECK_THROWS_WITH_AS(deserialize_taskset("{\n  \"format\": \n}"), doctest::Contains("line 3"), ParseError);

  std::string bad = doc;
  bad.replace(bad.find("\"period\": 1000000"), 17, "\"period\": \"x\"");
  CHECK_THROWS_WITH_AS(deserialize_taskset(bad), doctest::Contains("$.tasks[0].period"), ParseError);

  std::string mismatch = doc;
  mismatch.replace(mismatch.find("\"deadline\": 1000000"), 19, "\"deadline\": 900000");
  CHECK_THROWS_WITH_AS(deserialize_taskset(mismatch), doctest::Contains("D_i = T_i"), InvariantViolation);

  std::string version = doc;
  version.replace(version.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK_THROWS_AS(deserialize_taskset(version), ParseError);
}
