#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hmarl/ddpg.hpp"
#include "hmarl/neural.hpp"

namespace testing {

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

/// Central differences of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline std::vector<double> flat(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

inline hmarl::MlpNet random_net(std::mt19937_64& rng, hmarl::OutputHead head) {
  std::uniform_int_distribution<std::size_t> depth(1, 3), width(1, 16), in(1, 8);
  std::vector<std::size_t> sizes{in(rng)};
  const std::size_t layers = depth(rng);
  for (std::size_t l = 1; l < layers; ++l) sizes.push_back(width(rng));
  sizes.push_back(head == hmarl::OutputHead::Softmax || head == hmarl::OutputHead::L1Relu ? 2 + width(rng) % 6
                                                                                          : width(rng));
  hmarl::MlpNet net(sizes, head, rng());
  // Nonzero biases so the check also covers them.
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = n(rng);
  }
  return net;
}

struct NetCheck {
  double parameters = 0.0;
  double input = 0.0;
};

/// Compares backward() with central differences of sum(forward(x) .* g).
inline NetCheck check_net_gradients(const hmarl::MlpNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g,
                                    double eps = 1e-5) {
  hmarl::GradientTape tape;
  net.forward(x, tape);
  const hmarl::Gradients grads = net.backward(tape, g);

  hmarl::MlpNet probe = net;
  const auto loss_params = [&](const std::vector<double>& p) {
    probe.set_flat_parameters(p);
    return (probe.forward(x).array() * g.array()).sum();
  };
  const auto loss_input = [&](const std::vector<double>& v) {
    const Eigen::MatrixXd xi = Eigen::Map<const Eigen::MatrixXd>(v.data(), x.rows(), x.cols());
    return (net.forward(xi).array() * g.array()).sum();
  };
  NetCheck out;
  out.parameters = relative_error(net.flat_gradients(grads), numeric_gradient(loss_params, net.flat_parameters(), eps));
  out.input = relative_error(flat(grads.input), numeric_gradient(loss_input, flat(x), eps));
  return out;
}

/// Actor gradient of -mean Q(s, head(mu(s))) against central differences.
inline double check_actor_chain(const hmarl::AgentBundle& bundle, const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& context, double eps = 1e-5) {
  hmarl::Gradients grads;
  hmarl::actor_objective_gradient(bundle, obs, context, &grads);
  hmarl::AgentBundle probe = bundle;
  const auto objective = [&](const std::vector<double>& p) {
    probe.actor.set_flat_parameters(p);
    return -hmarl::actor_objective_gradient(probe, obs, context, nullptr);
  };
  return relative_error(bundle.actor.flat_gradients(grads), numeric_gradient(objective, bundle.actor.flat_parameters(), eps));
}

/// Critic gradient of the TD loss against central differences (targets frozen).
inline double check_critic_chain(const hmarl::AgentBundle& bundle, const hmarl::UpdateBatch& batch, double eps = 1e-5) {
  hmarl::Gradients grads;
  hmarl::critic_loss_gradient(bundle, batch, &grads);
  hmarl::AgentBundle probe = bundle;
  const auto loss = [&](const std::vector<double>& p) {
    probe.critic.set_flat_parameters(p);
    return hmarl::critic_loss_gradient(probe, batch, nullptr);
  };
  return relative_error(bundle.critic.flat_gradients(grads), numeric_gradient(loss, bundle.critic.flat_parameters(), eps));
}

}  // namespace testing
