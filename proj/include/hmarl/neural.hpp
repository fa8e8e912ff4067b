#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hmarl {

enum class OutputHead {
  Linear,
  Relu,
  Softmax,  // nonnegative, sums to 1
  L1Relu,   // relu(z) / ||relu(z)||_1, uniform when relu(z) is all zero
};

std::string to_string(OutputHead head);
OutputHead output_head_from_string(const std::string& name);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Parameter gradients (summed over the batch) plus the gradient with respect
/// to the input batch.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;

  Gradients& operator*=(double scale);
};

class MlpNet;

/// Activations cached by a forward pass; a backward pass consumes it.
class GradientTape {
 public:
  const Eigen::MatrixXd& output() const { return output_; }
  bool consumed() const { return consumed_; }

 private:
  friend class MlpNet;
  const MlpNet* owner_ = nullptr;
  std::vector<Eigen::MatrixXd> inputs_;  // input of each layer
  std::vector<Eigen::MatrixXd> pre_;     // pre-activation of each layer
  Eigen::MatrixXd output_;
  bool consumed_ = false;
};

/// Fully connected network with ReLU hidden units. Batches are column-major:
/// one sample per column.
class MlpNet {
 public:
  MlpNet() = default;
  /// Weights uniform in +-1/sqrt(fan_in), biases zero. A nonnegative
  /// `final_layer_range` overrides the range of the last layer's weights.
  MlpNet(std::vector<std::size_t> layer_sizes, OutputHead head, std::uint64_t seed,
         double final_layer_range = -1.0);

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  OutputHead head() const { return head_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch) const;
  std::vector<double> predict(std::span<const double> input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, GradientTape& tape) const;

  /// Reverse-mode gradients of sum(output .* output_grad). Throws
  /// std::logic_error if the tape was already used or came from another net.
  Gradients backward(GradientTape& tape, const Eigen::MatrixXd& output_grad) const;

  /// Adaptive-moment descent step with bias correction.
  void adam_step(const Gradients& grads, const AdamConfig& config);
  std::uint64_t adam_steps() const { return adam_t_; }

  /// this <- tau * live + (1 - tau) * this.
  void soft_update(const MlpNet& live, double tau);

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);
  std::vector<double> flat_gradients(const Gradients& grads) const;

  /// Writes `<stem>.bin` (little-endian float64) and `<stem>.json` (shapes).
  void save(const std::string& stem) const;
  static MlpNet load(const std::string& stem);

  bool same_parameters(const MlpNet& other) const;

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<std::size_t> sizes_;
  OutputHead head_ = OutputHead::Linear;
  std::vector<Layer> layers_;
  std::vector<Layer> adam_m_;
  std::vector<Layer> adam_v_;
  std::uint64_t adam_t_ = 0;
};

/// softmax: total * softmax(raw); l1: total * relu(raw) / ||relu(raw)||_1 with
/// a uniform fallback. Only Softmax and L1Relu heads are accepted.
std::vector<double> normalize_budget(std::span<const double> raw, OutputHead head, double total);

/// Applies the head's output activation column-wise.
Eigen::MatrixXd apply_head(OutputHead head, const Eigen::MatrixXd& logits);

/// Vector-Jacobian product of apply_head: maps d(loss)/d(output) to
/// d(loss)/d(logits). `output` must equal apply_head(head, logits).
Eigen::MatrixXd head_backward(OutputHead head, const Eigen::MatrixXd& logits, const Eigen::MatrixXd& output,
                              const Eigen::MatrixXd& output_grad);

}  // namespace hmarl
