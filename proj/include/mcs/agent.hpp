#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcs/dqn.hpp"
#include "mcs/sim.hpp"

namespace mcs::agent {

struct ActivationRecord {
  std::uint64_t activation = 0;
  SimTime time;
  double epsilon = 0.0;
  double reward = 0.0;        // accrued since the previous application
  std::optional<double> loss; // nullopt when no train step ran
  std::size_t action = 0;
  bool rejected = false;      // outcome of this activation's proposal
};

// Hosts a DQN inside the simulator. In training mode every activation stores
// the transition completed by it and runs train steps; evaluation is greedy.
class DqnAgent : public sim::AgentHook {
 public:
  DqnAgent(const TaskSet& ts, const dqn::Hyperparameters& hp, std::uint64_t seed);

  std::optional<BudgetConfiguration> on_activation(const sim::AgentObservation& obs) override;
  void on_outcome(bool applied) override;

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  // Forget the pending (state, action) pair and the log; keeps the network.
  void begin_episode();
  // Re-derive the exploration and replay-sampling streams.
  void reseed(std::uint64_t seed);

  const std::vector<ActivationRecord>& log() const { return log_; }
  double total_reward() const { return total_reward_; }
  std::uint64_t rejected() const { return rejected_; }
  std::uint64_t activations() const { return activations_; }
  void set_activations(std::uint64_t a) { activations_ = a; }

  dqn::Trainer& trainer() { return trainer_; }
  const dqn::Trainer& trainer() const { return trainer_; }
  std::size_t task_count() const { return n_; }

 private:
  const TaskSet* ts_;
  std::size_t n_;
  dqn::Trainer trainer_;
  Rng explore_rng_;
  Rng replay_rng_;
  bool training_ = true;
  std::uint64_t activations_ = 0;  // drives the exploration schedule
  std::optional<dqn::StateVector> prev_state_;
  std::size_t prev_action_ = 0;
  bool prev_rejected_ = false;
  std::vector<ActivationRecord> log_;
  double total_reward_ = 0.0;
  std::uint64_t rejected_ = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary checkpoint; layout in docs/FORMATS.md.
void save_checkpoint(std::ostream& out, const DqnAgent& agent);
// Throws CheckpointError on a bad header, version or task-count mismatch.
DqnAgent load_checkpoint(std::istream& in, const TaskSet& ts, std::uint64_t seed);

void save_checkpoint_file(const std::string& path, const DqnAgent& agent);
DqnAgent load_checkpoint_file(const std::string& path, const TaskSet& ts, std::uint64_t seed);

}  // namespace mcs::agent
