#include "hmarl/ddpg.hpp"

#include <cmath>
#include <string>

#include "hmarl/seeding.hpp"

namespace hmarl {

OUNoise::OUNoise(std::size_t dim, double theta, double sigma, std::uint64_t seed)
    : theta_(theta), sigma_(sigma), x_(dim, 0.0), rng_(seed) {
  if (theta < 0.0 || sigma < 0.0) throw std::invalid_argument("OUNoise: theta and sigma must be >= 0");
}

const std::vector<double>& OUNoise::sample(double dt) {
  const double diffusion = sigma_ * std::sqrt(dt);
  for (double& x : x_) {
    const double shock = normal_(rng_);
    x += theta_ * (0.0 - x) * dt + diffusion * shock;
  }
  return x_;
}

void OUNoise::reset() { std::fill(x_.begin(), x_.end(), 0.0); }

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  const Eigen::Index n = a.cols();
  Eigen::MatrixXd out(a.rows() + b.rows() + c.rows(), n);
  out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.middleRows(a.rows(), b.rows()) = b;
  out.bottomRows(c.rows()) = c;
  return out;
}

void check_batch(const AgentBundle& bundle, const UpdateBatch& b) {
  const Eigen::Index n = b.obs.cols();
  const auto in = static_cast<Eigen::Index>(bundle.input_dim);
  const auto ctx = static_cast<Eigen::Index>(bundle.context_dim);
  const auto act = static_cast<Eigen::Index>(bundle.action_dim);
  const bool ok = n > 0 && b.obs.rows() == in && b.next_obs.rows() == in && b.next_obs.cols() == n &&
                  b.context.rows() == ctx && b.next_context.rows() == ctx &&
                  (ctx == 0 || (b.context.cols() == n && b.next_context.cols() == n)) && b.action.rows() == act &&
                  b.action.cols() == n && b.reward.size() == n && b.terminal.size() == n;
  if (!ok) throw std::invalid_argument("update_actor_critic: batch shape does not match the agent");
}

}  // namespace

AgentBundle::AgentBundle(std::size_t input, std::size_t context, std::size_t action, const AgentConfig& config,
                         std::uint64_t seed)
    : input_dim(input),
      context_dim(context),
      action_dim(action),
      action_head(config.action_head),
      actor(layer_sizes(input, config.actor_hidden, action), OutputHead::Linear, derive_seed(seed, "actor"),
            config.actor_final_range),
      critic(layer_sizes(input + context + action, config.critic_hidden, 1), config.critic_head,
             derive_seed(seed, "critic")),
      actor_target(actor),
      critic_target(critic),
      gamma(config.gamma),
      tau(config.tau),
      noise(action, config.ou_theta, config.ou_sigma, derive_seed(seed, "ou")) {
  if (input == 0 || action == 0) throw std::invalid_argument("AgentBundle: input and action sizes must be >= 1");
  if (!(config.tau > 0.0 && config.tau <= 1.0)) throw std::invalid_argument("AgentBundle: tau must be in (0, 1]");
  if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) throw std::invalid_argument("AgentBundle: gamma must be in [0, 1]");
  actor_opt.learning_rate = config.actor_lr;
  critic_opt.learning_rate = config.critic_lr;
}

std::vector<double> AgentBundle::act(std::span<const double> input, bool explore) {
  std::vector<double> z = actor.predict(input);
  if (explore) {
    const auto& n = noise.sample();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += n[i];
  }
  const Eigen::MatrixXd y = apply_head(action_head, Eigen::Map<const Eigen::MatrixXd>(z.data(), z.size(), 1));
  return {y.data(), y.data() + y.size()};
}

Eigen::MatrixXd AgentBundle::policy(const Eigen::MatrixXd& inputs, bool target) const {
  return apply_head(action_head, (target ? actor_target : actor).forward(inputs));
}

double critic_loss_gradient(const AgentBundle& bundle, const UpdateBatch& batch, Gradients* grads) {
  check_batch(bundle, batch);
  const Eigen::Index n = batch.obs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd ctx = bundle.context_dim == 0 ? Eigen::MatrixXd(0, n) : batch.context;
  const Eigen::MatrixXd next_ctx = bundle.context_dim == 0 ? Eigen::MatrixXd(0, n) : batch.next_context;

  const Eigen::MatrixXd next_action = bundle.policy(batch.next_obs, true);
  const Eigen::MatrixXd next_q = bundle.critic_target.forward(stack_rows(batch.next_obs, next_ctx, next_action));
  const Eigen::VectorXd not_terminal = Eigen::VectorXd::Ones(n) - batch.terminal;
  const Eigen::RowVectorXd y =
      batch.reward.transpose() + bundle.gamma * not_terminal.transpose().cwiseProduct(next_q.row(0));

  GradientTape tape;
  const Eigen::MatrixXd q = bundle.critic.forward(stack_rows(batch.obs, ctx, batch.action), tape);
  const Eigen::RowVectorXd err = q.row(0) - y;
  if (grads != nullptr) *grads = bundle.critic.backward(tape, 2.0 * inv_n * err);
  return err.squaredNorm() * inv_n;
}

double actor_objective_gradient(const AgentBundle& bundle, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& context,
                                Gradients* grads) {
  const Eigen::Index n = obs.cols();
  if (n == 0 || obs.rows() != static_cast<Eigen::Index>(bundle.input_dim) ||
      context.rows() != static_cast<Eigen::Index>(bundle.context_dim) || (context.rows() > 0 && context.cols() != n)) {
    throw std::invalid_argument("actor_objective_gradient: batch shape does not match the agent");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd ctx = bundle.context_dim == 0 ? Eigen::MatrixXd(0, n) : context;
  GradientTape actor_tape;
  const Eigen::MatrixXd logits = bundle.actor.forward(obs, actor_tape);
  const Eigen::MatrixXd action = apply_head(bundle.action_head, logits);
  GradientTape q_tape;
  const Eigen::MatrixXd q = bundle.critic.forward(stack_rows(obs, ctx, action), q_tape);
  if (grads != nullptr) {
    // Descent direction of -mean Q, chained through the critic's action input and the head.
    const Gradients through = bundle.critic.backward(q_tape, Eigen::MatrixXd::Constant(1, n, -inv_n));
    const Eigen::MatrixXd d_action = through.input.bottomRows(static_cast<Eigen::Index>(bundle.action_dim));
    *grads = bundle.actor.backward(actor_tape, head_backward(bundle.action_head, logits, action, d_action));
  }
  return q.mean();
}

UpdateStats update_actor_critic(AgentBundle& bundle, const UpdateBatch& batch) {
  UpdateStats stats;
  Gradients grads;
  stats.critic_loss = critic_loss_gradient(bundle, batch, &grads);
  bundle.critic.adam_step(grads, bundle.critic_opt);

  stats.actor_objective = actor_objective_gradient(bundle, batch.obs, batch.context, &grads);
  bundle.actor.adam_step(grads, bundle.actor_opt);

  bundle.critic_target.soft_update(bundle.critic, bundle.tau);
  bundle.actor_target.soft_update(bundle.actor, bundle.tau);
  return stats;
}

Eigen::MatrixXd columns(std::span<const std::vector<double>> cols, std::size_t rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != rows) throw std::invalid_argument("columns: ragged input");
    for (std::size_t i = 0; i < rows; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  }
  return out;
}

UpdateStats update_ddpg(AgentBundle& bundle, std::span<const Transition> batch) {
  if (batch.empty()) throw std::invalid_argument("update_ddpg: empty batch");
  if (bundle.context_dim != 0) throw std::invalid_argument("update_ddpg: agent expects critic context");
  const auto n = static_cast<Eigen::Index>(batch.size());
  UpdateBatch b;
  b.obs.resize(static_cast<Eigen::Index>(bundle.input_dim), n);
  b.next_obs.resize(b.obs.rows(), n);
  b.action.resize(static_cast<Eigen::Index>(bundle.action_dim), n);
  b.context.resize(0, n);
  b.next_context.resize(0, n);
  b.reward.resize(n);
  b.terminal.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = batch[static_cast<std::size_t>(j)];
    if (t.obs.size() != bundle.input_dim || t.next_obs.size() != bundle.input_dim ||
        t.action.size() != bundle.action_dim) {
      throw std::invalid_argument("update_ddpg: transition " + std::to_string(j) + " does not match the agent");
    }
    b.obs.col(j) = Eigen::Map<const Eigen::VectorXd>(t.obs.data(), b.obs.rows());
    b.next_obs.col(j) = Eigen::Map<const Eigen::VectorXd>(t.next_obs.data(), b.obs.rows());
    b.action.col(j) = Eigen::Map<const Eigen::VectorXd>(t.action.data(), b.action.rows());
    b.reward(j) = t.reward;
    b.terminal(j) = t.terminal ? 1.0 : 0.0;
  }
  return update_actor_critic(bundle, b);
}

std::size_t maddpg_context_dim(std::span<const std::size_t> action_dims, std::size_t k, std::size_t global_dim,
                               bool centralized) {
  if (!centralized) return 0;
  std::size_t dim = global_dim;
  for (std::size_t j = 0; j < action_dims.size(); ++j) {
    if (j != k) dim += action_dims[j];
  }
  return dim;
}

std::vector<UpdateStats> update_maddpg(std::span<AgentBundle> bundles, std::span<const JointTransition> batch,
                                       bool centralized) {
  const std::size_t K = bundles.size();
  if (batch.empty()) throw std::invalid_argument("update_maddpg: empty batch");
  const std::size_t global_dim = batch.front().global_state.size();
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const JointTransition& t = batch[j];
    bool ok = t.obs.size() == K && t.next_obs.size() == K && t.action.size() == K && t.reward.size() == K &&
              t.budget.size() == K && t.next_budget.size() == K;
    if (centralized) ok = ok && t.global_state.size() == global_dim && t.next_global_state.size() == global_dim;
    for (std::size_t k = 0; ok && k < K; ++k) {
      ok = t.obs[k].size() + 1 == bundles[k].input_dim && t.next_obs[k].size() + 1 == bundles[k].input_dim &&
           t.action[k].size() == bundles[k].action_dim;
    }
    if (!ok) throw std::invalid_argument("update_maddpg: record " + std::to_string(j) + " is misaligned");
  }

  const auto n = static_cast<Eigen::Index>(batch.size());
  std::vector<Eigen::MatrixXd> obs(K), next_obs(K), action(K), next_action(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto in = static_cast<Eigen::Index>(bundles[k].input_dim);
    obs[k].resize(in, n);
    next_obs[k].resize(in, n);
    action[k].resize(static_cast<Eigen::Index>(bundles[k].action_dim), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const JointTransition& t = batch[static_cast<std::size_t>(j)];
      obs[k].col(j).head(in - 1) = Eigen::Map<const Eigen::VectorXd>(t.obs[k].data(), in - 1);
      obs[k](in - 1, j) = t.budget[k];
      next_obs[k].col(j).head(in - 1) = Eigen::Map<const Eigen::VectorXd>(t.next_obs[k].data(), in - 1);
      next_obs[k](in - 1, j) = t.next_budget[k];
      action[k].col(j) = Eigen::Map<const Eigen::VectorXd>(t.action[k].data(), action[k].rows());
    }
    if (centralized) next_action[k] = bundles[k].policy(next_obs[k], true);
  }

  Eigen::MatrixXd global, next_global;
  if (centralized) {
    global.resize(static_cast<Eigen::Index>(global_dim), n);
    next_global.resize(global.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const JointTransition& t = batch[static_cast<std::size_t>(j)];
      global.col(j) = Eigen::Map<const Eigen::VectorXd>(t.global_state.data(), global.rows());
      next_global.col(j) = Eigen::Map<const Eigen::VectorXd>(t.next_global_state.data(), global.rows());
    }
  }

  std::vector<UpdateStats> stats(K);
  for (std::size_t k = 0; k < K; ++k) {
    UpdateBatch b;
    b.obs = obs[k];
    b.next_obs = next_obs[k];
    b.action = action[k];
    b.reward.resize(n);
    b.terminal.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const JointTransition& t = batch[static_cast<std::size_t>(j)];
      b.reward(j) = t.reward[k];
      b.terminal(j) = t.terminal ? 1.0 : 0.0;
    }
    if (centralized) {
      const std::size_t ctx = bundles[k].context_dim;
      b.context.resize(static_cast<Eigen::Index>(ctx), n);
      b.next_context.resize(b.context.rows(), n);
      b.context.topRows(global.rows()) = global;
      b.next_context.topRows(global.rows()) = next_global;
      Eigen::Index row = global.rows();
      for (std::size_t other = 0; other < K; ++other) {
        if (other == k) continue;
        const Eigen::Index r = action[other].rows();
        if (row + r > b.context.rows()) throw std::invalid_argument("update_maddpg: critic context too small");
        b.context.middleRows(row, r) = action[other];
        b.next_context.middleRows(row, r) = next_action[other];
        row += r;
      }
      if (row != b.context.rows()) throw std::invalid_argument("update_maddpg: critic context size mismatch");
    } else {
      b.context.resize(0, n);
      b.next_context.resize(0, n);
    }
    stats[k] = update_actor_critic(bundles[k], b);
  }
  return stats;
}

}  // namespace hmarl
