#include "hmarl/neural.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace hmarl {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

std::string to_string(OutputHead head) {
  switch (head) {
    case OutputHead::Linear: return "linear";
    case OutputHead::Relu: return "relu";
    case OutputHead::Softmax: return "softmax";
    case OutputHead::L1Relu: return "l1";
  }
  return "linear";
}

OutputHead output_head_from_string(const std::string& name) {
  if (name == "linear") return OutputHead::Linear;
  if (name == "relu") return OutputHead::Relu;
  if (name == "softmax") return OutputHead::Softmax;
  if (name == "l1" || name == "l1-relu") return OutputHead::L1Relu;
  throw std::invalid_argument("unknown output head '" + name + "'");
}

Gradients& Gradients::operator*=(double scale) {
  for (auto& w : weight) w *= scale;
  for (auto& b : bias) b *= scale;
  input *= scale;
  return *this;
}

namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd relu_gate(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

Eigen::MatrixXd apply_head(OutputHead head, const Eigen::MatrixXd& logits) {
  switch (head) {
    case OutputHead::Linear:
      return logits;
    case OutputHead::Relu:
      return relu(logits);
    case OutputHead::Softmax: {
      Eigen::MatrixXd out(logits.rows(), logits.cols());
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double peak = logits.col(c).maxCoeff();
        out.col(c) = (logits.col(c).array() - peak).exp().matrix();
        out.col(c) /= out.col(c).sum();
      }
      return out;
    }
    case OutputHead::L1Relu: {
      Eigen::MatrixXd out = relu(logits);
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double total = out.col(c).sum();
        if (total > 0.0) {
          out.col(c) /= total;
        } else {
          out.col(c).setConstant(1.0 / static_cast<double>(out.rows()));
        }
      }
      return out;
    }
  }
  return logits;
}

Eigen::MatrixXd head_backward(OutputHead head, const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                              const Eigen::MatrixXd& g) {
  switch (head) {
    case OutputHead::Linear:
      return g;
    case OutputHead::Relu:
      return g.cwiseProduct(relu_gate(z));
    case OutputHead::Softmax: {
      Eigen::MatrixXd delta(y.rows(), y.cols());
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        const double dot = g.col(c).dot(y.col(c));
        delta.col(c) = y.col(c).cwiseProduct((g.col(c).array() - dot).matrix());
      }
      return delta;
    }
    case OutputHead::L1Relu: {
      Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(y.rows(), y.cols());
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        const double total = z.col(c).cwiseMax(0.0).sum();
        if (total <= 0.0) continue;  // uniform fallback is locally constant
        const double dot = g.col(c).dot(y.col(c));
        delta.col(c) = ((g.col(c).array() - dot) / total).matrix().cwiseProduct(relu_gate(z.col(c)));
      }
      return delta;
    }
  }
  return g;
}

MlpNet::MlpNet(std::vector<std::size_t> layer_sizes, OutputHead head, std::uint64_t seed,
               double final_layer_range)
    : sizes_(std::move(layer_sizes)), head_(head) {
  if (sizes_.size() < 2) throw std::invalid_argument("MlpNet: need at least input and output sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("MlpNet: layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l]);
    const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
    const bool last = l + 2 == sizes_.size();
    const double range = last && final_layer_range >= 0.0 ? final_layer_range : 1.0 / std::sqrt(double(in));
    std::uniform_real_distribution<double> dist(-range, range);
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index i = 0; i < out; ++i) {
      for (Eigen::Index j = 0; j < in; ++j) layer.weight(i, j) = range > 0.0 ? dist(rng) : 0.0;
    }
    layers_.push_back(std::move(layer));
    adam_m_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    adam_v_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

void MlpNet::check_input(Eigen::Index rows) const {
  if (layers_.empty()) throw std::logic_error("MlpNet: uninitialized network");
  if (static_cast<std::size_t>(rows) != input_size()) {
    throw std::invalid_argument("MlpNet: input has " + std::to_string(rows) + " rows, expected " +
                                std::to_string(input_size()));
  }
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd& batch) const {
  check_input(batch.rows());
  Eigen::MatrixXd x = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    x = l + 1 < layers_.size() ? relu(z) : apply_head(head_, z);
  }
  return x;
}

std::vector<double> MlpNet::predict(std::span<const double> input) const {
  const Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd y = forward(Eigen::MatrixXd(x));
  return {y.data(), y.data() + y.size()};
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd& batch, GradientTape& tape) const {
  check_input(batch.rows());
  tape = GradientTape{};
  tape.owner_ = this;
  Eigen::MatrixXd x = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    tape.inputs_.push_back(std::move(x));
    x = l + 1 < layers_.size() ? relu(z) : apply_head(head_, z);
    tape.pre_.push_back(std::move(z));
  }
  tape.output_ = x;
  return x;
}

Gradients MlpNet::backward(GradientTape& tape, const Eigen::MatrixXd& output_grad) const {
  if (tape.owner_ != this) throw std::logic_error("MlpNet::backward: tape belongs to another network");
  if (tape.consumed_) throw std::logic_error("MlpNet::backward: tape already consumed");
  if (output_grad.rows() != tape.output_.rows() || output_grad.cols() != tape.output_.cols()) {
    throw std::invalid_argument("MlpNet::backward: output gradient shape mismatch");
  }
  tape.consumed_ = true;

  Eigen::MatrixXd delta = head_backward(head_, tape.pre_.back(), tape.output_, output_grad);

  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.weight[l] = delta * tape.inputs_[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    Eigen::MatrixXd upstream = layers_[l].weight.transpose() * delta;
    if (l > 0) {
      delta = upstream.cwiseProduct(relu_gate(tape.pre_[l - 1]));
    } else {
      g.input = std::move(upstream);
    }
  }
  return g;
}

void MlpNet::adam_step(const Gradients& grads, const AdamConfig& config) {
  if (grads.weight.size() != layers_.size() || grads.bias.size() != layers_.size()) {
    throw std::invalid_argument("adam_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (grads.weight[l].rows() != layers_[l].weight.rows() || grads.weight[l].cols() != layers_[l].weight.cols() ||
        grads.bias[l].size() != layers_[l].bias.size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  ++adam_t_;
  const double t = static_cast<double>(adam_t_);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  const auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    param.array() -= config.learning_rate * (m.array() / correct1) /
                     ((v.array() / correct2).sqrt() + config.epsilon);
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    update(layers_[l].weight, adam_m_[l].weight, adam_v_[l].weight, grads.weight[l]);
    update(layers_[l].bias, adam_m_[l].bias, adam_v_[l].bias, grads.bias[l]);
  }
}

void MlpNet::soft_update(const MlpNet& live, double tau) {
  if (live.sizes_ != sizes_) throw std::invalid_argument("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight = tau * live.layers_[l].weight + (1.0 - tau) * layers_[l].weight;
    layers_[l].bias = tau * live.layers_[l].bias + (1.0 - tau) * layers_[l].bias;
  }
}

std::size_t MlpNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

std::vector<double> MlpNet::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Layer& layer : layers_) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) out.push_back(layer.weight(i, j));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias(i));
  }
  return out;
}

void MlpNet::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw std::invalid_argument("set_flat_parameters: size mismatch");
  std::size_t k = 0;
  for (Layer& layer : layers_) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = values[k++];
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = values[k++];
  }
}

std::vector<double> MlpNet::flat_gradients(const Gradients& grads) const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (Eigen::Index i = 0; i < grads.weight[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < grads.weight[l].cols(); ++j) out.push_back(grads.weight[l](i, j));
    }
    for (Eigen::Index i = 0; i < grads.bias[l].size(); ++i) out.push_back(grads.bias[l](i));
  }
  return out;
}

void MlpNet::save(const std::string& stem) const {
  const std::vector<double> params = flat_parameters();
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + stem + ".bin");
  bin.write(reinterpret_cast<const char*>(params.data()), static_cast<std::streamsize>(params.size() * sizeof(double)));

  nlohmann::json meta;
  meta["format"] = "hmarl-mlp";
  meta["version"] = 1;
  meta["dtype"] = "float64-le";
  meta["head"] = to_string(head_);
  meta["layer_sizes"] = sizes_;
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto w = static_cast<std::size_t>(layers_[l].weight.size());
    const auto b = static_cast<std::size_t>(layers_[l].bias.size());
    tensors.push_back({{"name", "layer" + std::to_string(l) + ".weight"},
                       {"shape", {layers_[l].weight.rows(), layers_[l].weight.cols()}},
                       {"order", "row-major"},
                       {"offset", offset}});
    offset += w;
    tensors.push_back({{"name", "layer" + std::to_string(l) + ".bias"}, {"shape", {b}}, {"offset", offset}});
    offset += b;
  }
  meta["tensors"] = tensors;
  meta["parameter_count"] = params.size();
  std::ofstream json(stem + ".json");
  if (!json) throw std::runtime_error("cannot write " + stem + ".json");
  json << meta.dump(2) << '\n';
}

MlpNet MlpNet::load(const std::string& stem) {
  std::ifstream json(stem + ".json");
  if (!json) throw std::runtime_error("cannot read " + stem + ".json");
  const nlohmann::json meta = nlohmann::json::parse(json);
  if (meta.value("format", "") != "hmarl-mlp" || meta.value("dtype", "") != "float64-le") {
    throw std::runtime_error(stem + ".json: unsupported checkpoint format");
  }
  MlpNet net(meta.at("layer_sizes").get<std::vector<std::size_t>>(),
             output_head_from_string(meta.at("head").get<std::string>()), 0);
  std::vector<double> params(net.parameter_count());
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + stem + ".bin");
  bin.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(params.size() * sizeof(double))) {
    throw std::runtime_error(stem + ".bin: truncated parameter file");
  }
  net.set_flat_parameters(params);
  return net;
}

bool MlpNet::same_parameters(const MlpNet& other) const {
  return sizes_ == other.sizes_ && head_ == other.head_ && flat_parameters() == other.flat_parameters();
}

std::vector<double> normalize_budget(std::span<const double> raw, OutputHead head, double total) {
  if (!(total >= 0.0)) throw std::invalid_argument("normalize_budget: total must be >= 0");
  if (head != OutputHead::Softmax && head != OutputHead::L1Relu) {
    throw std::invalid_argument("normalize_budget: head must be softmax or l1");
  }
  if (raw.empty()) return {};
  const Eigen::Map<const Eigen::VectorXd> logits(raw.data(), static_cast<Eigen::Index>(raw.size()));
  const Eigen::MatrixXd shares = apply_head(head, Eigen::MatrixXd(logits));
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = total * shares(static_cast<Eigen::Index>(i), 0);
  return out;
}

}  // namespace hmarl
