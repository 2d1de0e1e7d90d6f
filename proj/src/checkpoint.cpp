#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mcs/agent.hpp"

namespace mcs::agent {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'C', 'S', 'D', 'Q', 'N', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void params(const dqn::Parameters<double>& p) {
    for (double v : p.flatten()) f64(v);
  }
  void vec(const dqn::StateVector& s) {
    for (Eigen::Index i = 0; i < s.size(); ++i) f64(s(i));
  }

 private:
  void bytes(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void params(dqn::Parameters<double>& p) {
    std::vector<double> flat(p.count());
    for (double& v : flat) v = f64();
    p.unflatten(flat);
  }
  dqn::StateVector vec(std::size_t n) {
    dqn::StateVector s(n);
    for (std::size_t i = 0; i < n; ++i) s(i) = f64();
    return s;
  }

 private:
  std::uint64_t bytes(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) throw CheckpointError("truncated checkpoint");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  std::istream& in_;
};

}  // namespace

void save_checkpoint(std::ostream& out, const DqnAgent& agent) {
  const auto& tr = agent.trainer();
  const auto& hp = tr.hyperparameters();
  const auto& sizes = tr.policy().sizes();
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(agent.task_count()));
  w.u32(static_cast<std::uint32_t>(sizes.size()));
  for (auto s : sizes) w.u32(static_cast<std::uint32_t>(s));
  w.u64(tr.policy().output_size());
  w.u64(tr.adam().steps());
  w.u64(tr.train_steps());
  w.u64(agent.activations());
  w.u64(hp.batch_size);
  w.u64(hp.min_memory);
  w.u64(hp.max_memory);
  w.u64(hp.target_update_frequency);
  w.u64(hp.train_steps_per_activation);
  w.u64(hp.learn_from_rejected ? 1 : 0);
  w.u64(static_cast<std::uint64_t>(hp.hidden));
  for (double v : {hp.gamma, hp.learning_rate, hp.adam_beta1, hp.adam_beta2, hp.adam_epsilon, hp.exploration.start,
                   hp.exploration.end, hp.exploration.decay}) {
    w.f64(v);
  }
  w.params(tr.policy().params());
  w.params(tr.target().params());
  w.params(tr.adam().first_moment());
  w.params(tr.adam().second_moment());
  const auto& mem = tr.memory();
  w.u64(mem.size());
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const auto& t = mem[i];
    w.vec(t.state);
    w.u64(t.action);
    w.f64(t.reward);
    w.vec(t.next_state);
    w.u64(t.rejected ? 1 : 0);
  }
  if (!out) throw CheckpointError("failed to write checkpoint");
}

DqnAgent load_checkpoint(std::istream& in, const TaskSet& ts, std::uint64_t seed) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw CheckpointError("not a DQN checkpoint");
  Reader r(in);
  const auto version = r.u32();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const std::size_t n = r.u32();
  if (n != ts.size()) {
    throw CheckpointError("checkpoint is for " + std::to_string(n) + " tasks, task set has " + std::to_string(ts.size()));
  }
  std::vector<std::size_t> sizes(r.u32());
  for (auto& s : sizes) s = r.u32();
  const auto actions = r.u64();
  const auto adam_steps = r.u64();
  const auto train_steps = r.u64();
  const auto activations = r.u64();

  dqn::Hyperparameters hp;
  hp.batch_size = r.u64();
  hp.min_memory = r.u64();
  hp.max_memory = r.u64();
  hp.target_update_frequency = r.u64();
  hp.train_steps_per_activation = r.u64();
  hp.learn_from_rejected = r.u64() != 0;
  const auto hidden = r.u64();
  if (hidden > 2) throw CheckpointError("bad hidden-layer shape code");
  hp.hidden = static_cast<dqn::HiddenShape>(hidden);
  hp.gamma = r.f64();
  hp.learning_rate = r.f64();
  hp.adam_beta1 = r.f64();
  hp.adam_beta2 = r.f64();
  hp.adam_epsilon = r.f64();
  hp.exploration.start = r.f64();
  hp.exploration.end = r.f64();
  hp.exploration.decay = r.f64();

  DqnAgent agent(ts, hp, seed);
  auto& tr = agent.trainer();
  if (tr.policy().sizes() != sizes || actions != tr.policy().output_size()) {
    throw CheckpointError("checkpoint layer shapes do not match the task set");
  }
  r.params(tr.policy().params());
  r.params(tr.target().params());
  r.params(tr.adam().first_moment());
  r.params(tr.adam().second_moment());
  tr.adam().set_steps(adam_steps);
  tr.set_train_steps(train_steps);
  agent.set_activations(activations);

  const auto stored = r.u64();
  tr.memory().clear();
  for (std::uint64_t i = 0; i < stored; ++i) {
    dqn::Transition t;
    t.state = r.vec(2 * n);
    t.action = r.u64();
    t.reward = r.f64();
    t.next_state = r.vec(2 * n);
    t.rejected = r.u64() != 0;
    if (t.action >= actions) throw CheckpointError("replay transition has an out-of-range action");
    tr.memory().push(std::move(t));
  }
  if (!tr.policy().all_finite() || !tr.target().all_finite()) throw CheckpointError("checkpoint weights are not finite");
  return agent;
}

void save_checkpoint_file(const std::string& path, const DqnAgent& agent) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  save_checkpoint(out, agent);
}

DqnAgent load_checkpoint_file(const std::string& path, const TaskSet& ts, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  return load_checkpoint(in, ts, seed);
}

}  // namespace mcs::agent
