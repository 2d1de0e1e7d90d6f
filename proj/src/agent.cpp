#include "mcs/agent.hpp"

namespace mcs::agent {

namespace {
Rng init_stream(std::uint64_t seed) { return make_stream(seed, "dqn-init"); }
}  // namespace

DqnAgent::DqnAgent(const TaskSet& ts, const dqn::Hyperparameters& hp, std::uint64_t seed)
    : ts_(&ts), n_(ts.size()) {
  Rng init = init_stream(seed);
  trainer_ = dqn::Trainer(n_, hp, init);
  reseed(seed);
}

void DqnAgent::reseed(std::uint64_t seed) {
  explore_rng_ = make_stream(seed, "dqn-explore");
  replay_rng_ = make_stream(seed, "dqn-replay");
}

void DqnAgent::begin_episode() {
  prev_state_.reset();
  prev_rejected_ = false;
  log_.clear();
  total_reward_ = 0.0;
  rejected_ = 0;
}

std::optional<BudgetConfiguration> DqnAgent::on_activation(const sim::AgentObservation& obs) {
  ActivationRecord rec;
  rec.activation = activations_;
  rec.time = obs.now;
  const dqn::StateVector s = dqn::encode_state(obs.budgets, obs.last_exec, *ts_);
  if (prev_state_) {
    rec.reward = dqn::reward_of(obs.events);
    total_reward_ += rec.reward;
    if (training_) trainer_.remember({*prev_state_, prev_action_, rec.reward, s, prev_rejected_});
  }
  if (training_) {
    for (std::size_t k = 0; k < trainer_.hyperparameters().train_steps_per_activation; ++k) {
      if (auto loss = trainer_.train_step(replay_rng_)) rec.loss = loss;
    }
  }
  rec.epsilon = training_ ? trainer_.hyperparameters().exploration.epsilon(activations_) : 0.0;
  rec.action = dqn::select_action(trainer_.policy(), s, rec.epsilon, explore_rng_);
  ++activations_;
  prev_state_ = s;
  prev_action_ = rec.action;
  prev_rejected_ = false;
  log_.push_back(rec);
  return dqn::apply_action(dqn::action_at(rec.action, n_), obs.budgets);
}

void DqnAgent::on_outcome(bool applied) {
  prev_rejected_ = !applied;
  if (!applied) {
    ++rejected_;
    if (!log_.empty()) log_.back().rejected = true;
  }
}

}  // namespace mcs::agent
