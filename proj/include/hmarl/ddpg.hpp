#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "hmarl/neural.hpp"

namespace hmarl {

/// Bounded ring buffer with a seeded uniform sampler (no repeats within a batch).
template <typename T>
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[next_] = std::move(item);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const T& operator[](std::size_t i) const { return items_.at(i); }

  /// Floyd's subset sampling; requires size() >= batch.
  std::vector<std::size_t> sample_indices(std::size_t batch) {
    if (batch > items_.size()) throw std::logic_error("ReplayBuffer: batch larger than buffer");
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    std::unordered_set<std::size_t> seen;
    const std::size_t n = items_.size();
    for (std::size_t j = n - batch; j < n; ++j) {
      std::uniform_int_distribution<std::size_t> dist(0, j);
      const std::size_t t = dist(rng_);
      const std::size_t chosen = seen.insert(t).second ? t : j;
      if (chosen == j) seen.insert(j);
      picked.push_back(chosen);
    }
    return picked;
  }

  std::vector<T> sample(std::size_t batch) {
    std::vector<T> out;
    out.reserve(batch);
    for (std::size_t i : sample_indices(batch)) out.push_back(items_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<T> items_;
  std::mt19937_64 rng_;
};

/// Ornstein-Uhlenbeck process with zero mean:
/// x <- x + theta * (0 - x) * dt + sigma * sqrt(dt) * N(0, I).
class OUNoise {
 public:
  OUNoise() = default;
  OUNoise(std::size_t dim, double theta, double sigma, std::uint64_t seed);

  const std::vector<double>& sample(double dt = 1.0);
  void reset();
  void set_state(std::vector<double> x) { x_ = std::move(x); }
  const std::vector<double>& state() const noexcept { return x_; }

 private:
  double theta_ = 0.15;
  double sigma_ = 0.2;
  std::vector<double> x_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct AgentConfig {
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  /// Maps actor outputs to the executed action (Softmax/L1Relu give shares).
  OutputHead action_head = OutputHead::Linear;
  OutputHead critic_head = OutputHead::Linear;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.01;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  /// Range of the actor's final-layer weights at init (negative: default rule).
  double actor_final_range = 3e-3;
};

/// Actor, critic, their target copies and exploration state for one agent.
/// The critic reads [actor input; context; action], where context carries
/// critic-only information (empty for plain DDPG).
struct AgentBundle {
  AgentBundle() = default;
  AgentBundle(std::size_t input_dim, std::size_t context_dim, std::size_t action_dim, const AgentConfig& config,
              std::uint64_t seed);

  std::size_t input_dim = 0;
  std::size_t context_dim = 0;
  std::size_t action_dim = 0;
  OutputHead action_head = OutputHead::Linear;
  MlpNet actor;
  MlpNet critic;
  MlpNet actor_target;
  MlpNet critic_target;
  AdamConfig actor_opt;
  AdamConfig critic_opt;
  double gamma = 0.99;
  double tau = 0.01;
  OUNoise noise;

  /// Executed action for one observation; adds the next OU sample to the raw
  /// actor output when `explore` is set.
  std::vector<double> act(std::span<const double> input, bool explore);
  /// Deterministic actions (no noise) for a batch, optionally from the target actor.
  Eigen::MatrixXd policy(const Eigen::MatrixXd& inputs, bool target) const;
};

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
};

/// Column-major training batch; row blocks follow AgentBundle's critic layout.
struct UpdateBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd context;
  Eigen::MatrixXd action;
  Eigen::VectorXd reward;
  Eigen::MatrixXd next_obs;
  Eigen::MatrixXd next_context;
  Eigen::VectorXd terminal;  // 1 for terminal transitions
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean Q(s, mu(s)) before the actor step
};

/// Mean squared TD error of the live critic against r + gamma (1 - terminal)
/// Q'(s', mu'(s')); fills the critic's parameter gradients when `grads` is set.
double critic_loss_gradient(const AgentBundle& bundle, const UpdateBatch& batch, Gradients* grads);

/// Mean Q(s, context, head(mu(s))); fills the actor's gradients of the
/// negated objective (a descent direction) when `grads` is set.
double actor_objective_gradient(const AgentBundle& bundle, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& context,
                                Gradients* grads);

/// One critic regression step toward r + gamma (1 - terminal) Q'(s', mu'(s')),
/// one actor ascent step on mean Q(s, mu(s)), then soft target updates.
UpdateStats update_actor_critic(AgentBundle& bundle, const UpdateBatch& batch);

UpdateStats update_ddpg(AgentBundle& bundle, std::span<const Transition> batch);

/// Aligned per-timestep record for the low-level agents.
struct JointTransition {
  std::vector<std::vector<double>> obs;       // per agent
  std::vector<double> budget;                 // allocated share per agent
  std::vector<std::vector<double>> action;    // per agent
  std::vector<double> reward;                 // per agent
  std::vector<std::vector<double>> next_obs;  // per agent
  std::vector<double> next_budget;
  std::vector<double> global_state;
  std::vector<double> next_global_state;
  bool terminal = false;
};

/// Per-agent DDPG updates over a joint batch. Each actor reads (obs_k,
/// budget_k). With `centralized` the critic also reads the global state and
/// the other agents' actions; otherwise its context is empty. Throws
/// std::invalid_argument for misaligned records.
std::vector<UpdateStats> update_maddpg(std::span<AgentBundle> bundles, std::span<const JointTransition> batch,
                                       bool centralized);

/// Context width the critic of agent k needs under update_maddpg.
std::size_t maddpg_context_dim(std::span<const std::size_t> action_dims, std::size_t k, std::size_t global_dim,
                               bool centralized);

/// Stacks equal-length vectors as columns.
Eigen::MatrixXd columns(std::span<const std::vector<double>> cols, std::size_t rows);

}  // namespace hmarl
