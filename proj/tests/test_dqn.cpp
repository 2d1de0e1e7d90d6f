#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "dqn_checks.hpp"
#include "mcs/agent.hpp"
#include "mcs/dqn.hpp"
#include "mcs/sim.hpp"
#include "stats.hpp"
#include "support.hpp"

using namespace mcs;
using namespace mcs::dqn;
using namespace mcs::testing;

TEST_CASE("action space size and bijection") {
  CHECK(action_count(3) == 3);
  CHECK(action_count(10) == 360);
  CHECK(action_count(18) == 2448);
  CHECK_THROWS(action_count(2));
  for (std::size_t n : {3u, 4u, 7u, 18u}) {
    const auto all = enumerate_actions(n);
    REQUIRE(all.size() == action_count(n));
    std::set<std::tuple<TaskId, TaskId, TaskId>> seen;
    for (std::size_t k = 0; k < all.size(); ++k) {
      const auto& t = all[k];
      CHECK(t.up != t.down1);
      CHECK(t.up != t.down2);
      CHECK(t.down1 < t.down2);
      CHECK(action_index(t, n) == k);
      CHECK(action_at(k, n) == t);
      seen.insert({t.up, t.down1, t.down2});
    }
    CHECK(seen.size() == all.size());
  }
  CHECK_THROWS(action_at(3, 3));
  CHECK_THROWS(action_index(ActionTriple{0, 0, 1}, 3));
}

TEST_CASE("apply_action") {
  BudgetConfiguration b(std::vector<SimTime>{SimTime{1000}, SimTime{1000}, SimTime{1000}, SimTime{1}});
  const auto out = apply_action(ActionTriple{0, 1, 3}, b);
  CHECK(out[0] == SimTime{1100});
  CHECK(out[1] == SimTime{950});
  CHECK(out[2] == SimTime{1000});
  CHECK(out[3] == SimTime{1});  // 0.95 rounds to 1, and never below one tick
  // Rounding to nearest: 15 * 1.1 = 16.5 -> 17, 15 * 0.95 = 14.25 -> 14.
  BudgetConfiguration c(std::vector<SimTime>{SimTime{15}, SimTime{15}, SimTime{15}});
  const auto d = apply_action(ActionTriple{2, 0, 1}, c);
  CHECK(d[2] == SimTime{17});
  CHECK(d[0] == SimTime{14});
}

TEST_CASE("state encoding") {
  Task t0 = make_task(0, ms(10), SimTime{150}, std::nullopt, 0);
  t0.runnables.push_back(Runnable{ms(10), SimTime{150}, SimTime{100}, SimTime{300}, CriticalityLevel::LO, {}});
  Task t1 = t0;
  t1.id = 1;
  const auto ts = make_set({t0, t1});
  BudgetConfiguration b(std::vector<SimTime>{SimTime{200}, SimTime{50}});
  const auto s = encode_state(b, {SimTime{300}, SimTime{400}}, ts);
  REQUIRE(s.size() == 4);
  CHECK(s(0) == doctest::Approx(0.5));
  CHECK(s(1) == doctest::Approx(1.0));
  CHECK(s(2) == 0.0);  // clamped
  CHECK(s(3) == 1.0);  // clamped
  CHECK_THROWS(encode_state(b, {SimTime{1}}, ts));
}

TEST_CASE("reward") {
  using E = sim::RewardEvent;
  const std::vector<E> a{E::JobStart, E::JobStart, E::JobStart, E::LoOverrun};
  CHECK(reward_of(a) == doctest::Approx(-0.7));
  const std::vector<E> b{E::HiOverrun};
  CHECK(reward_of(b) == doctest::Approx(-2.0));
  CHECK(reward_of({}) == 0.0);
}

TEST_CASE("forward pass") {
  SUBCASE("zero weights give zero output") {
    Mlp<double> net({4, 2, 3});
    const auto q = net.forward(Eigen::VectorXd::Ones(4));
    CHECK(q.isZero());
  }
  SUBCASE("hand-set weights") {
    Mlp<double> net({2, 2, 1});
    auto& p = net.params();
    p.weights[0] << 1, -1, 2, 1;
    p.biases[0] << 0, -10;
    p.weights[1] << 3, 5;
    p.biases[1] << 0.5;
    Eigen::VectorXd x(2);
    x << 2, 1;
    // hidden = relu([1, -5]) = [1, 0]; out = 3 + 0.5.
    CHECK(net.forward(x)(0) == doctest::Approx(3.5));
  }
  SUBCASE("float scalar") {
    Mlp<float> net({3, 2, 2});
    Rng rng(1);
    net.initialize(rng);
    CHECK(net.forward(Eigen::VectorXf::Ones(3)).allFinite());
  }
  SUBCASE("non-finite output") {
    Mlp<double> net({1, 1});
    net.params().weights[0](0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Ones(1)), ModelCorruption);
  }
  CHECK_THROWS(Mlp<double>({3}));
}

TEST_CASE("initialization bounds") {
  Mlp<double> net({16, 8, 4});
  Rng rng(3);
  net.initialize(rng);
  CHECK(net.params().weights[0].cwiseAbs().maxCoeff() <= 0.25);
  CHECK(net.params().weights[1].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK(net.params().count() == 16 * 8 + 8 + 8 * 4 + 4);
  auto flat = net.params().flatten();
  Mlp<double> copy({16, 8, 4});
  copy.params().unflatten(flat);
  CHECK(copy.params().flatten() == flat);
}

TEST_CASE("exploration") {
  ExplorationSchedule e;
  CHECK(e.epsilon(0) == doctest::Approx(0.9));
  CHECK(e.epsilon(200) == doctest::Approx(0.05 + 0.85 / std::exp(1.0)));
  CHECK(e.epsilon(1'000'000) == doctest::Approx(0.05));

  Mlp<double> net({6, 3, 20});
  Rng rng(12);
  std::vector<std::size_t> counts(20, 0);
  const StateVector s = StateVector::Zero(6);
  for (int k = 0; k < 40'000; ++k) ++counts[select_action(net, s, 1.0, rng)];
  CHECK(stats::chi_square_uniform(counts) < stats::chi_square_critical(19));
}

TEST_CASE("greedy tie-break and mask") {
  Eigen::VectorXd q(4);
  q << 1, 3, 3, 2;
  CHECK(greedy_action(q) == 1);
  std::vector<bool> mask{true, false, true, true};
  CHECK(greedy_action(q, &mask) == 2);
  Mlp<double> zero({2, 5});
  Rng rng(1);
  CHECK(select_action(zero, StateVector::Zero(2), 0.0, rng) == 0);
}

TEST_CASE("replay memory") {
  ReplayMemory m(200);
  for (int k = 0; k < 201; ++k) {
    Transition t;
    t.action = static_cast<std::size_t>(k);
    m.push(t);
  }
  CHECK(m.size() == 200);
  CHECK(m[0].action == 1);
  CHECK(m[199].action == 200);

  Rng rng(4);
  std::vector<std::size_t> counts(200, 0);
  for (int k = 0; k < 20'000; ++k) {
    const auto batch = m.sample(5, rng);
    std::set<const Transition*> distinct(batch.begin(), batch.end());
    CHECK(distinct.size() == 5);
    for (const auto* t : batch) ++counts[t->action - 1];
  }
  CHECK(stats::chi_square_uniform(counts) < stats::chi_square_critical(199));
  CHECK_THROWS(m.sample(201, rng));
  CHECK_THROWS(ReplayMemory(0));
}

TEST_CASE("gradients match finite differences") {
  for (auto shape : {HiddenShape::Half, HiddenShape::FullHalf, HiddenShape::FullHalfQuarter}) {
    for (std::size_t n : {3u, 6u, 12u}) {
      INFO(to_string(shape) << " n=" << n);
      CHECK(dqn_checks::max_gradient_error(n, shape, 100 + n) < 1e-4);
    }
  }
}

TEST_CASE("gamma = 0 on one repeated transition") {
  for (auto shape : {HiddenShape::Half, HiddenShape::FullHalf, HiddenShape::FullHalfQuarter}) {
    const auto losses = dqn_checks::repeated_transition_losses(6, shape, 300, 5);
    CHECK(dqn_checks::windows_decrease(losses));
    CHECK(losses.back() < losses.front());
  }
}

TEST_CASE("trainer") {
  Hyperparameters hp;
  Rng rng(1);
  Trainer tr(4, hp, rng);
  CHECK(tr.policy().sizes() == std::vector<std::size_t>{8, 2, 12});
  CHECK(tr.policy().params().flatten() == tr.target().params().flatten());
  CHECK_FALSE(tr.train_step(rng).has_value());
  CHECK(tr.refused() == 1);
  for (const auto& t : dqn_checks::random_transitions(hp.min_memory, 8, 12, rng)) tr.remember(t);
  for (int k = 1; k <= 4; ++k) {
    REQUIRE(tr.train_step(rng).has_value());
    CHECK(tr.policy().params().flatten() != tr.target().params().flatten());
  }
  tr.train_step(rng);
  CHECK(tr.policy().params().flatten() == tr.target().params().flatten());  // synced every 5 steps
  CHECK(tr.train_steps() == 5);

  hp.learn_from_rejected = false;
  Trainer strict(4, hp, rng);
  Transition rejected = dqn_checks::random_transitions(1, 8, 12, rng).front();
  rejected.rejected = true;
  strict.remember(rejected);
  CHECK(strict.memory().size() == 0);

  hp.batch_size = 50;
  CHECK_THROWS(Trainer(4, hp, rng));
  CHECK(hidden_sizes(HiddenShape::FullHalfQuarter, 5) == std::vector<std::size_t>{5, 3, 2});
  CHECK(parse_hidden_shape(to_string(HiddenShape::FullHalf)) == HiddenShape::FullHalf);
}

namespace {

TaskSet agent_set() {
  std::vector<Task> tasks;
  for (TaskId i = 0; i < 4; ++i) {
    Task t = make_task(i, ms(10 * (i + 1)), ms(1), i % 2 ? std::optional<SimTime>(ms(2)) : std::nullopt,
                       static_cast<int>(i));
    t.runnables.push_back(Runnable{t.period, us(800), us(500), ms(2), t.criticality, {}});
    t.runnables.back().weibull = workload::fit_weibull(us(500), us(800), ms(2));
    tasks.push_back(t);
  }
  return make_set(tasks);
}

std::vector<double> state_of(const agent::DqnAgent& a) {
  auto out = a.trainer().policy().params().flatten();
  for (double v : a.trainer().target().params().flatten()) out.push_back(v);
  for (double v : a.trainer().adam().first_moment().flatten()) out.push_back(v);
  for (double v : a.trainer().adam().second_moment().flatten()) out.push_back(v);
  return out;
}

void train_for(agent::DqnAgent& a, const TaskSet& ts, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.duration = SimTime::from_seconds(2);
  cfg.seed = seed;
  a.set_training(true);
  a.begin_episode();
  sim::run(ts, cfg, &a);
}

}  // namespace

TEST_CASE("agent in the loop") {
  const auto ts = agent_set();
  REQUIRE(analysis::amc_rtb_test(ts).schedulable);
  agent::DqnAgent a(ts, Hyperparameters{}, 3);
  train_for(a, ts, 10);
  CHECK(a.activations() > 150);
  CHECK(a.trainer().train_steps() > 100);
  CHECK(a.log().size() == a.activations());
  CHECK(a.log().front().epsilon == doctest::Approx(0.9));
  double sum = 0.0;
  for (const auto& r : a.log()) sum += r.reward;
  CHECK(sum == doctest::Approx(a.total_reward()));

  a.set_training(false);
  a.begin_episode();
  const auto steps = a.trainer().train_steps();
  sim::SimConfig cfg;
  cfg.duration = SimTime::from_seconds(1);
  sim::run(ts, cfg, &a);
  CHECK(a.trainer().train_steps() == steps);
  for (const auto& r : a.log()) CHECK(r.epsilon == 0.0);
}

TEST_CASE("checkpoint round trip and resume") {
  const auto ts = agent_set();
  Hyperparameters hp;
  hp.hidden = HiddenShape::FullHalfQuarter;
  hp.batch_size = 6;
  agent::DqnAgent a(ts, hp, 5);
  train_for(a, ts, 1);

  std::stringstream buf;
  agent::save_checkpoint(buf, a);
  agent::DqnAgent b = agent::load_checkpoint(buf, ts, 77);
  CHECK(state_of(a) == state_of(b));
  CHECK(b.activations() == a.activations());
  CHECK(b.trainer().train_steps() == a.trainer().train_steps());
  CHECK(b.trainer().adam().steps() == a.trainer().adam().steps());
  REQUIRE(b.trainer().memory().size() == a.trainer().memory().size());
  for (std::size_t k = 0; k < a.trainer().memory().size(); ++k) {
    CHECK(b.trainer().memory()[k].state == a.trainer().memory()[k].state);
    CHECK(b.trainer().memory()[k].action == a.trainer().memory()[k].action);
  }
  CHECK(b.trainer().hyperparameters().hidden == HiddenShape::FullHalfQuarter);
  CHECK(b.trainer().hyperparameters().batch_size == 6);

  // Resuming from the checkpoint continues bit-identically.
  a.reseed(77);
  train_for(a, ts, 2);
  train_for(b, ts, 2);
  CHECK(state_of(a) == state_of(b));

  SUBCASE("task count mismatch") {
    std::stringstream again;
    agent::save_checkpoint(again, a);
    TaskSet other = ts;
    other.tasks.pop_back();
    CHECK_THROWS_AS(agent::load_checkpoint(again, other, 1), agent::CheckpointError);
  }
  SUBCASE("corrupt header") {
    std::stringstream bad("NOTACHECKPOINT");
    CHECK_THROWS_AS(agent::load_checkpoint(bad, ts, 1), agent::CheckpointError);
  }
  SUBCASE("truncated") {
    std::stringstream again;
    agent::save_checkpoint(again, a);
    std::string s = again.str();
    std::stringstream cut(s.substr(0, s.size() / 2));
    CHECK_THROWS_AS(agent::load_checkpoint(cut, ts, 1), agent::CheckpointError);
  }
}
