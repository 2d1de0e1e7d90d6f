#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mcs/model.hpp"
#include "mcs/rng.hpp"
#include "mcs/sim.hpp"

// Deep Q-network over budget-adjustment actions. Networks are templated on the
// scalar type; training uses double.
namespace mcs::dqn {

class ModelCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Actions: raise one budget, lower two others.

struct ActionTriple {
  TaskId up = 0;
  TaskId down1 = 0;
  TaskId down2 = 0;
  bool operator==(const ActionTriple&) const = default;
};

inline std::size_t action_count(std::size_t n) {
  if (n < 3) throw std::invalid_argument("action space needs at least 3 tasks");
  return n * (n - 1) * (n - 2) / 2;
}

// Lexicographic by (up, down1, down2).
inline std::vector<ActionTriple> enumerate_actions(std::size_t n) {
  std::vector<ActionTriple> out;
  out.reserve(action_count(n));
  for (TaskId u = 0; u < n; ++u) {
    for (TaskId a = 0; a < n; ++a) {
      if (a == u) continue;
      for (TaskId b = a + 1; b < n; ++b) {
        if (b != u) out.push_back({u, a, b});
      }
    }
  }
  return out;
}

inline std::size_t action_index(const ActionTriple& t, std::size_t n) {
  if (t.up >= n || t.down1 >= t.down2 || t.down2 >= n || t.up == t.down1 || t.up == t.down2) {
    throw std::invalid_argument("invalid action triple");
  }
  // Rank the pair among the n-1 ids that remain once `up` is removed.
  const std::size_t m = n - 1;
  const std::size_t a = t.down1 - (t.down1 > t.up ? 1 : 0);
  const std::size_t b = t.down2 - (t.down2 > t.up ? 1 : 0);
  const std::size_t pair_rank = a * m - a * (a + 1) / 2 + (b - a - 1);
  return t.up * (m * (m - 1) / 2) + pair_rank;
}

inline ActionTriple action_at(std::size_t index, std::size_t n) {
  const std::size_t m = n - 1;
  const std::size_t per_up = m * (m - 1) / 2;
  if (index >= n * per_up) throw std::out_of_range("action index out of range");
  ActionTriple t;
  t.up = index / per_up;
  std::size_t rank = index % per_up;
  std::size_t a = 0;
  while (rank >= m - 1 - a) {
    rank -= m - 1 - a;
    ++a;
  }
  const std::size_t b = a + 1 + rank;
  t.down1 = a + (a >= t.up ? 1 : 0);
  t.down2 = b + (b >= t.up ? 1 : 0);
  return t;
}

// +10% on `up`, -5% on the two others, rounded to the nearest tick and never
// below one tick.
inline BudgetConfiguration apply_action(const ActionTriple& t, const BudgetConfiguration& budgets) {
  auto scale = [](SimTime b, std::uint64_t percent) {
    const auto ticks = (b * percent).ticks();
    return SimTime{std::max<SimTime::rep>(1, (ticks + 50) / 100)};
  };
  BudgetConfiguration out = budgets;
  out.set(t.up, scale(budgets[t.up], 110));
  out.set(t.down1, scale(budgets[t.down1], 95));
  out.set(t.down2, scale(budgets[t.down2], 95));
  return out;
}

// ---------------------------------------------------------------------------
// State and reward

using StateVector = Eigen::VectorXd;

inline double min_max(SimTime x, SimTime lo, SimTime hi) {
  if (hi <= lo) return 0.0;
  const double v = (static_cast<double>(x.ticks()) - static_cast<double>(lo.ticks())) /
                   static_cast<double>(hi.ticks() - lo.ticks());
  return std::clamp(v, 0.0, 1.0);
}

// Interleaved (budget, last execution time) per task, ordered by task id.
inline StateVector encode_state(const BudgetConfiguration& budgets, const std::vector<SimTime>& last_exec,
                                const TaskSet& ts) {
  const std::size_t n = ts.size();
  if (budgets.size() != n || last_exec.size() != n) throw std::invalid_argument("state inputs do not match the task set");
  StateVector s(2 * n);
  for (TaskId i = 0; i < n; ++i) {
    const SimTime lo = ts[i].bcet_sum();
    const SimTime hi = ts[i].wcet_sum();
    s(2 * i) = min_max(budgets[i], lo, hi);
    s(2 * i + 1) = min_max(last_exec[i], lo, hi);
  }
  return s;
}

inline double reward_value(sim::RewardEvent e) {
  switch (e) {
    case sim::RewardEvent::JobStart: return 0.1;
    case sim::RewardEvent::LoOverrun: return -1.0;
    case sim::RewardEvent::HiOverrun: return -2.0;
  }
  return 0.0;
}

inline double reward_of(std::span<const sim::RewardEvent> events) {
  double r = 0.0;
  for (auto e : events) r += reward_value(e);
  return r;
}

// ---------------------------------------------------------------------------
// Network

template <typename Scalar>
struct Parameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  std::vector<Matrix> weights;  // weights[l] is out x in
  std::vector<Vector> biases;

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) c += weights[l].size() + biases[l].size();
    return c;
  }
  // Flat layout per layer: weights in row-major order, then biases.
  std::vector<Scalar> flatten() const {
    std::vector<Scalar> out;
    out.reserve(count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) out.push_back(weights[l](r, c));
      }
      for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
    }
    return out;
  }
  void unflatten(std::span<const Scalar> flat) {
    if (flat.size() != count()) throw std::invalid_argument("parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = flat[k++];
      }
      for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l](r) = flat[k++];
    }
  }
};

template <typename Scalar>
class Mlp {
 public:
  using Params = Parameters<Scalar>;
  using Matrix = typename Params::Matrix;
  using Vector = typename Params::Vector;

  // Activations of one forward pass; post[0] is the input.
  struct Tape {
    std::vector<Vector> post;
  };

  Mlp() = default;

  // sizes: input, hidden..., output. Parameters start at zero.
  explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs an input and an output layer");
    for (auto s : sizes_) {
      if (s == 0) throw std::invalid_argument("layer size must be positive");
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      p_.weights.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      p_.biases.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  // Uniform in +-1/sqrt(fan_in).
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < p_.weights.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      for (Eigen::Index i = 0; i < p_.weights[l].size(); ++i) {
        p_.weights[l].data()[i] = static_cast<Scalar>(uniform_real(rng, -bound, bound));
      }
      for (Eigen::Index i = 0; i < p_.biases[l].size(); ++i) {
        p_.biases[l](i) = static_cast<Scalar>(uniform_real(rng, -bound, bound));
      }
    }
  }

  Vector forward(const Vector& x) const {
    Tape tape;
    return forward(x, tape);
  }

  Vector forward(const Vector& x, Tape& tape) const {
    if (static_cast<std::size_t>(x.size()) != sizes_.front()) throw std::invalid_argument("input dimension mismatch");
    tape.post.assign(1, x);
    for (std::size_t l = 0; l < p_.weights.size(); ++l) {
      Vector z = p_.weights[l] * tape.post.back() + p_.biases[l];
      if (l + 1 < p_.weights.size()) z = z.cwiseMax(Scalar(0));
      tape.post.push_back(std::move(z));
    }
    if (!tape.post.back().allFinite()) throw ModelCorruption("network output is not finite");
    return tape.post.back();
  }

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Tape& tape, const Vector& d_out, Params& grad) const {
    Vector delta = d_out;
    for (std::size_t l = p_.weights.size(); l-- > 0;) {
      grad.weights[l].noalias() += delta * tape.post[l].transpose();
      grad.biases[l] += delta;
      if (l == 0) break;
      Vector back = p_.weights[l].transpose() * delta;
      // ReLU derivative; the post-activation is zero exactly where z <= 0.
      delta = (tape.post[l].array() > Scalar(0)).select(back, Vector::Zero(back.size()));
    }
  }

  Params zero_like() const {
    Params g = p_;
    g.set_zero();
    return g;
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  Params& params() { return p_; }
  const Params& params() const { return p_; }

  bool all_finite() const {
    for (std::size_t l = 0; l < p_.weights.size(); ++l) {
      if (!p_.weights[l].allFinite() || !p_.biases[l].allFinite()) return false;
    }
    return true;
  }

 private:
  std::vector<std::size_t> sizes_;
  Params p_;
};

template <typename Scalar>
struct AdamConfig {
  Scalar learning_rate = Scalar(5e-5);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
};

template <typename Scalar>
class Adam {
 public:
  using Params = Parameters<Scalar>;

  Adam() = default;
  Adam(const Mlp<Scalar>& net, AdamConfig<Scalar> cfg) : cfg_(cfg), m_(net.zero_like()), v_(net.zero_like()) {}

  void step(Mlp<Scalar>& net, const Params& grad) {
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(cfg_.beta1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(cfg_.beta2, static_cast<Scalar>(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = cfg_.beta1 * m + (Scalar(1) - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (Scalar(1) - cfg_.beta2) * g.cwiseProduct(g);
      param.array() -= cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
    };
    auto& p = net.params();
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      update(p.weights[l], m_.weights[l], v_.weights[l], grad.weights[l]);
      update(p.biases[l], m_.biases[l], v_.biases[l], grad.biases[l]);
    }
  }

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  Params& first_moment() { return m_; }
  Params& second_moment() { return v_; }
  const Params& first_moment() const { return m_; }
  const Params& second_moment() const { return v_; }
  const AdamConfig<Scalar>& config() const { return cfg_; }

 private:
  AdamConfig<Scalar> cfg_;
  Params m_;
  Params v_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Replay memory

struct Transition {
  StateVector state;
  std::size_t action = 0;
  double reward = 0.0;
  StateVector next_state;
  bool rejected = false;  // the proposed configuration failed validation
};

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 200) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
  }

  // Uniform sample without replacement (partial Fisher-Yates over indices).
  std::vector<const Transition*> sample(std::size_t k, Rng& rng) const {
    if (k > items_.size()) throw std::invalid_argument("sample larger than replay memory");
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.push_back(&items_[idx[i]]);
    }
    return out;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }
  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

// ---------------------------------------------------------------------------
// Policy

struct ExplorationSchedule {
  double start = 0.9;
  double end = 0.05;
  double decay = 200.0;  // in agent activations

  double epsilon(std::uint64_t step) const {
    return end + (start - end) * std::exp(-static_cast<double>(step) / decay);
  }
};

// Lowest index among the maxima; masked-out actions are skipped.
template <typename Derived>
std::size_t greedy_action(const Eigen::MatrixBase<Derived>& q, const std::vector<bool>* mask = nullptr) {
  std::optional<std::size_t> best;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    if (!best || q(i) > q(*best)) best = static_cast<std::size_t>(i);
  }
  if (!best) throw std::invalid_argument("no admissible action");
  return *best;
}

template <typename Scalar>
std::size_t select_action(const Mlp<Scalar>& net, const StateVector& s, double epsilon, Rng& rng,
                          const std::vector<bool>* mask = nullptr) {
  if (uniform01(rng) < epsilon) {
    if (!mask) return uniform_index(rng, net.output_size());
    std::vector<std::size_t> allowed;
    for (std::size_t i = 0; i < mask->size(); ++i) {
      if ((*mask)[i]) allowed.push_back(i);
    }
    if (allowed.empty()) throw std::invalid_argument("no admissible action");
    return allowed[uniform_index(rng, allowed.size())];
  }
  return greedy_action(net.forward(s.template cast<Scalar>()), mask);
}

// ---------------------------------------------------------------------------
// Training

enum class HiddenShape { Half, FullHalf, FullHalfQuarter };

inline std::string to_string(HiddenShape h) {
  switch (h) {
    case HiddenShape::Half: return "n/2";
    case HiddenShape::FullHalf: return "n,n/2";
    case HiddenShape::FullHalfQuarter: return "n,n/2,n/4";
  }
  return "?";
}

inline HiddenShape parse_hidden_shape(const std::string& s) {
  if (s == "n/2") return HiddenShape::Half;
  if (s == "n,n/2") return HiddenShape::FullHalf;
  if (s == "n,n/2,n/4") return HiddenShape::FullHalfQuarter;
  throw std::invalid_argument("unknown hidden layer shape '" + s + "'");
}

// Fractions of n round up, never below one.
inline std::vector<std::size_t> hidden_sizes(HiddenShape h, std::size_t n) {
  auto frac = [n](std::size_t d) { return std::max<std::size_t>(1, (n + d - 1) / d); };
  switch (h) {
    case HiddenShape::Half: return {frac(2)};
    case HiddenShape::FullHalf: return {n, frac(2)};
    case HiddenShape::FullHalfQuarter: return {n, frac(2), frac(4)};
  }
  return {};
}

struct Hyperparameters {
  std::size_t max_memory = 200;
  std::size_t min_memory = 20;
  double gamma = 0.99;
  std::size_t target_update_frequency = 5;
  double learning_rate = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  HiddenShape hidden = HiddenShape::Half;
  std::size_t batch_size = 3;
  ExplorationSchedule exploration;
  std::size_t train_steps_per_activation = 1;
  bool learn_from_rejected = true;

  void check() const {
    if (batch_size == 0 || batch_size > max_memory) throw std::invalid_argument("batch size must be in [1, max_memory]");
    if (min_memory < batch_size) throw std::invalid_argument("min_memory must be at least the batch size");
    if (target_update_frequency == 0) throw std::invalid_argument("target update frequency must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  }
};

// Mean over the batch of (Q_policy(s,a) - y)^2 with y = r + gamma max Q_target(s').
// When `grad` is given the gradient w.r.t. the policy parameters is added to it.
template <typename Scalar>
Scalar td_loss(const Mlp<Scalar>& policy, const Mlp<Scalar>& target, std::span<const Transition* const> batch,
               Scalar gamma, Parameters<Scalar>* grad = nullptr) {
  using Vector = typename Mlp<Scalar>::Vector;
  Scalar loss = 0;
  const Scalar inv = Scalar(1) / static_cast<Scalar>(batch.size());
  typename Mlp<Scalar>::Tape tape;
  for (const Transition* t : batch) {
    Scalar y = static_cast<Scalar>(t->reward);
    if (gamma != Scalar(0)) y += gamma * target.forward(t->next_state.template cast<Scalar>()).maxCoeff();
    const Vector q = policy.forward(t->state.template cast<Scalar>(), tape);
    const Scalar diff = q(t->action) - y;
    loss += diff * diff * inv;
    if (grad) {
      Vector d = Vector::Zero(q.size());
      d(t->action) = Scalar(2) * diff * inv;
      policy.backward(tape, d, *grad);
    }
  }
  return loss;
}

class Trainer {
 public:
  Trainer() = default;
  Trainer(std::size_t n_tasks, const Hyperparameters& hp, Rng& init_rng)
      : hp_(hp), memory_(hp.max_memory) {
    hp_.check();
    std::vector<std::size_t> sizes{2 * n_tasks};
    for (auto h : hidden_sizes(hp.hidden, n_tasks)) sizes.push_back(h);
    sizes.push_back(action_count(n_tasks));
    policy_ = Mlp<double>(sizes);
    policy_.initialize(init_rng);
    target_ = policy_;
    adam_ = Adam<double>(policy_, {hp.learning_rate, hp.adam_beta1, hp.adam_beta2, hp.adam_epsilon});
  }

  void remember(Transition t) {
    if (t.rejected && !hp_.learn_from_rejected) return;
    memory_.push(std::move(t));
  }

  // One gradient step; nullopt (and a counted refusal) below min_memory.
  std::optional<double> train_step(Rng& rng) {
    if (memory_.size() < hp_.min_memory) {
      ++refused_;
      return std::nullopt;
    }
    const auto batch = memory_.sample(hp_.batch_size, rng);
    auto grad = policy_.zero_like();
    const double loss = td_loss<double>(policy_, target_, batch, hp_.gamma, &grad);
    adam_.step(policy_, grad);
    if (!policy_.all_finite()) throw ModelCorruption("non-finite weights after update");
    ++train_steps_;
    if (train_steps_ % hp_.target_update_frequency == 0) sync_target();
    return loss;
  }

  void sync_target() { target_ = policy_; }

  const Hyperparameters& hyperparameters() const { return hp_; }
  Mlp<double>& policy() { return policy_; }
  Mlp<double>& target() { return target_; }
  const Mlp<double>& policy() const { return policy_; }
  const Mlp<double>& target() const { return target_; }
  Adam<double>& adam() { return adam_; }
  const Adam<double>& adam() const { return adam_; }
  ReplayMemory& memory() { return memory_; }
  const ReplayMemory& memory() const { return memory_; }
  std::uint64_t train_steps() const { return train_steps_; }
  void set_train_steps(std::uint64_t s) { train_steps_ = s; }
  std::uint64_t refused() const { return refused_; }

 private:
  Hyperparameters hp_;
  Mlp<double> policy_;
  Mlp<double> target_;
  Adam<double> adam_;
  ReplayMemory memory_{200};
  std::uint64_t train_steps_ = 0;
  std::uint64_t refused_ = 0;
};

}  // namespace mcs::dqn
