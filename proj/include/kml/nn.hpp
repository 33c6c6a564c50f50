#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kml/error.hpp"
#include "kml/matrix.hpp"

namespace kml::nn {

enum class LayerKind : std::uint8_t { fully_connected = 0, sigmoid = 1, relu = 2 };

const char* to_string(LayerKind kind);

template <typename Scalar>
struct FullyConnectedLayer {
  MatrixX<Scalar> weights;       // out x in
  MatrixX<Scalar> bias;          // out x 1
  MatrixX<Scalar> grad_weights;  // same shape as weights
  MatrixX<Scalar> grad_bias;     // same shape as bias
  MatrixX<Scalar> cached_input;  // in x 1, valid between forward and backward
  MatrixX<Scalar> output;
  MatrixX<Scalar> grad_input;

  FullyConnectedLayer(std::size_t in, std::size_t out)
      : weights(MatrixX<Scalar>::Zero(out, in)),
        bias(MatrixX<Scalar>::Zero(out, 1)),
        grad_weights(MatrixX<Scalar>::Zero(out, in)),
        grad_bias(MatrixX<Scalar>::Zero(out, 1)),
        cached_input(MatrixX<Scalar>::Zero(in, 1)),
        output(MatrixX<Scalar>::Zero(out, 1)),
        grad_input(MatrixX<Scalar>::Zero(in, 1)) {}

  std::size_t in_size() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_size() const { return static_cast<std::size_t>(weights.rows()); }

  void forward(const MatrixX<Scalar>& x) {
    cached_input = x;
    matmul_into(output, weights, x);
    output += bias;
  }

  // Gradients accumulate until the optimizer step clears them.
  void backward(const MatrixX<Scalar>& grad_out) {
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < weights.cols(); ++c) {
        grad_weights(r, c) += grad_out(r, 0) * cached_input(c, 0);
      }
    }
    grad_bias += grad_out;
    matmul_into(grad_input, weights.transpose(), grad_out);
  }
};

template <typename Scalar>
struct ActivationLayer {
  LayerKind kind;
  MatrixX<Scalar> cached_input;
  MatrixX<Scalar> output;
  MatrixX<Scalar> grad_input;

  ActivationLayer(LayerKind k, std::size_t width)
      : kind(k),
        cached_input(MatrixX<Scalar>::Zero(width, 1)),
        output(MatrixX<Scalar>::Zero(width, 1)),
        grad_input(MatrixX<Scalar>::Zero(width, 1)) {}

  std::size_t width() const { return static_cast<std::size_t>(output.rows()); }

  static Scalar sigmoid(Scalar x) {
    // Split on sign so exp never overflows.
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  }

  void forward(const MatrixX<Scalar>& x) {
    cached_input = x;
    if (kind == LayerKind::sigmoid) {
      output = x.unaryExpr([](Scalar v) { return sigmoid(v); });
    } else {
      output = x.cwiseMax(Scalar(0));
    }
  }

  void backward(const MatrixX<Scalar>& grad_out) {
    if (kind == LayerKind::sigmoid) {
      grad_input = grad_out.cwiseProduct(
          output.unaryExpr([](Scalar y) { return y * (Scalar(1) - y); }));
    } else {
      grad_input = grad_out.cwiseProduct(
          cached_input.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
  }
};

template <typename Scalar>
using Layer = std::variant<FullyConnectedLayer<Scalar>, ActivationLayer<Scalar>>;

/// Softmax fused with cross-entropy; the gradient with respect to the logits
/// is probabilities minus the one-hot label.
template <typename Scalar>
class CrossEntropyLoss {
 public:
  Scalar forward(const MatrixX<Scalar>& logits, std::size_t label) {
    if (label >= static_cast<std::size_t>(logits.size())) {
      throw ArgumentError("cross-entropy: label " + std::to_string(label) + " out of range for " +
                          std::to_string(logits.size()) + " classes");
    }
    softmax_into(probabilities_, logits);
    label_ = label;
    using Acc = AccumulatorOf<Scalar>;
    const Acc peak = static_cast<Acc>(logits.maxCoeff());
    Acc total = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      total += std::exp(static_cast<Acc>(logits(i)) - peak);
    }
    const Acc log_sum = peak + std::log(total);
    return static_cast<Scalar>(log_sum - static_cast<Acc>(logits(static_cast<Eigen::Index>(label))));
  }

  const MatrixX<Scalar>& gradient() {
    gradient_ = probabilities_;
    gradient_(static_cast<Eigen::Index>(label_)) -= Scalar(1);
    return gradient_;
  }

  const MatrixX<Scalar>& probabilities() const { return probabilities_; }

  void prepare(std::size_t classes) {
    probabilities_.resize(static_cast<Eigen::Index>(classes), 1);
    gradient_.resize(static_cast<Eigen::Index>(classes), 1);
  }

 private:
  MatrixX<Scalar> probabilities_;
  MatrixX<Scalar> gradient_;
  std::size_t label_ = 0;
};

template <typename Scalar>
class Network;

template <typename Scalar>
class SgdOptimizer {
 public:
  SgdOptimizer(Scalar learning_rate = Scalar(0.01), Scalar momentum = Scalar(0.99))
      : learning_rate_(learning_rate), momentum_(momentum) {}

  Scalar learning_rate() const { return learning_rate_; }
  Scalar momentum() const { return momentum_; }

  /// velocity <- momentum * velocity - lr * grad; param <- param + velocity;
  /// then clears every gradient.
  void step(Network<Scalar>& net);

  const std::vector<MatrixX<Scalar>>& velocities() const { return velocities_; }

  /// Shapes one zero velocity per parameter matrix (no-op once shaped).
  void prepare(const Network<Scalar>& net);

 private:
  Scalar learning_rate_;
  Scalar momentum_;
  std::vector<MatrixX<Scalar>> velocities_;  // weights, bias per FC layer
};

struct Architecture {
  std::size_t inputs = 4;
  std::vector<std::size_t> hidden;
  std::size_t classes = 4;
  LayerKind activation = LayerKind::sigmoid;
};

/// in -> 5 -> 15 -> 4, sigmoids between linear layers.
inline Architecture readahead_architecture() { return {4, {5, 15}, 4, LayerKind::sigmoid}; }
/// in -> 25 -> 10 -> 5 -> 4, sigmoids between linear layers.
inline Architecture nfs_architecture() { return {8, {25, 10, 5}, 4, LayerKind::sigmoid}; }

template <typename Scalar>
struct Prediction {
  std::size_t label = 0;
  MatrixX<Scalar> probabilities;
};

/// A chain of layers trained with cross-entropy loss and momentum SGD.
/// Inputs are column vectors (features x 1); outputs are class logits.
template <typename Scalar>
class Network {
 public:
  Network() = default;

  /// Builds a chain per `arch` with uniform Glorot initialisation drawn from
  /// a PRNG seeded with `seed`; biases start at zero.
  static Network build(const Architecture& arch, std::uint64_t seed,
                       SgdOptimizer<Scalar> optimizer = SgdOptimizer<Scalar>()) {
    Network net;
    net.optimizer_ = optimizer;
    std::mt19937_64 rng(seed);
    std::size_t width = arch.inputs;
    for (std::size_t h : arch.hidden) {
      net.add_fully_connected(width, h, rng);
      net.add_activation(arch.activation);
      width = h;
    }
    net.add_fully_connected(width, arch.classes, rng);
    return net;
  }

  void add_fully_connected(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    if (in == 0 || out == 0) throw ArgumentError("fully-connected layer needs positive sizes");
    FullyConnectedLayer<Scalar> fc(in, out);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < fc.weights.size(); ++i) fc.weights(i) = static_cast<Scalar>(dist(rng));
    append(Layer<Scalar>(std::move(fc)));
  }

  /// Appends an already-parameterised layer (used by model loading).
  void add_fully_connected(MatrixX<Scalar> weights, MatrixX<Scalar> bias) {
    if (bias.rows() != weights.rows() || bias.cols() != 1) {
      throw ShapeError("bias " + shape_string(bias) + " does not match weights " +
                       shape_string(weights));
    }
    FullyConnectedLayer<Scalar> fc(static_cast<std::size_t>(weights.cols()),
                                   static_cast<std::size_t>(weights.rows()));
    fc.weights = std::move(weights);
    fc.bias = std::move(bias);
    append(Layer<Scalar>(std::move(fc)));
  }

  void add_activation(LayerKind kind) {
    if (kind == LayerKind::fully_connected) throw ArgumentError("not an activation kind");
    if (layers_.empty()) throw ShapeError("activation cannot be the first layer");
    append(Layer<Scalar>(ActivationLayer<Scalar>(kind, output_size())));
  }

  void set_optimizer(SgdOptimizer<Scalar> optimizer) { optimizer_ = std::move(optimizer); }

  std::size_t input_size() const { return layer_in(layers_.front()); }
  std::size_t output_size() const { return layer_out(layers_.back()); }
  std::size_t class_count() const { return layers_.empty() ? 0 : output_size(); }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  std::vector<Layer<Scalar>>& layers() { return layers_; }
  const SgdOptimizer<Scalar>& optimizer() const { return optimizer_; }
  bool empty() const { return layers_.empty(); }

  /// Runs the chain, caching whatever each layer's backward rule needs.
  const MatrixX<Scalar>& forward(const MatrixX<Scalar>& input) {
    check_input(input);
    const MatrixX<Scalar>* x = &input;
    for (auto& layer : layers_) {
      std::visit([&](auto& l) { l.forward(*x); x = &l.output; }, layer);
    }
    forward_pending_ = true;
    return *x;
  }

  /// Back-propagates `loss_grad` (d loss / d logits) into every
  /// fully-connected layer's gradient buffers. Weights are not touched.
  void backward(const MatrixX<Scalar>& loss_grad) {
    if (!forward_pending_) throw StateError("backward called without a preceding forward pass");
    if (loss_grad.rows() != static_cast<Eigen::Index>(output_size()) || loss_grad.cols() != 1) {
      throw ShapeError("backward: loss gradient " + shape_string(loss_grad) + " does not match " +
                       std::to_string(output_size()) + "x1 logits");
    }
    const MatrixX<Scalar>* g = &loss_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      std::visit([&](auto& l) { l.backward(*g); g = &l.grad_input; }, *it);
    }
    forward_pending_ = false;
  }

  void sgd_step() { optimizer_.step(*this); }

  /// Shapes the loss, optimizer and scratch buffers up front so training
  /// and classification never allocate afterwards.
  void prepare() {
    if (layers_.empty()) return;
    loss_.prepare(output_size());
    optimizer_.prepare(*this);
    scratch_probabilities_.resize(static_cast<Eigen::Index>(output_size()), 1);
  }

  /// forward + loss + backward + SGD step on one sample; returns the loss
  /// measured before the step.
  Scalar train_iteration(const MatrixX<Scalar>& features, std::size_t label) {
    if (label >= class_count()) {
      throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(class_count()) + " classes");
    }
    const auto& logits = forward(features);
    const Scalar loss = loss_.forward(logits, label);
    backward(loss_.gradient());
    sgd_step();
    return loss;
  }

  /// Class with the highest softmax probability (lowest index on ties).
  /// Reuses the network's forward buffers, so it does not allocate once
  /// shapes have settled; use `predict` for concurrent read-only callers.
  std::size_t classify(const MatrixX<Scalar>& features) {
    softmax_into(scratch_probabilities_, forward(features));
    forward_pending_ = false;
    return argmax(scratch_probabilities_);
  }

  /// Read-only inference with per-call scratch; safe to call concurrently on
  /// a network no thread is training.
  Prediction<Scalar> predict(const MatrixX<Scalar>& features) const {
    check_input(features);
    MatrixX<Scalar> x = features;
    MatrixX<Scalar> y;
    for (const auto& layer : layers_) {
      if (const auto* fc = std::get_if<FullyConnectedLayer<Scalar>>(&layer)) {
        matmul_into(y, fc->weights, x);
        y += fc->bias;
      } else {
        const auto& act = std::get<ActivationLayer<Scalar>>(layer);
        if (act.kind == LayerKind::sigmoid) {
          y = x.unaryExpr([](Scalar v) { return ActivationLayer<Scalar>::sigmoid(v); });
        } else {
          y = x.cwiseMax(Scalar(0));
        }
      }
      std::swap(x, y);
    }
    Prediction<Scalar> out;
    softmax_into(out.probabilities, x);
    out.label = argmax(out.probabilities);
    return out;
  }

  /// Bytes held by parameters, gradients, optimizer velocities and the
  /// per-layer forward/backward buffers.
  std::size_t dynamic_bytes() const {
    std::size_t scalars = 0;
    for (const auto& layer : layers_) {
      std::visit(
          [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, FullyConnectedLayer<Scalar>>) {
              scalars += static_cast<std::size_t>(l.weights.size() * 3 + l.bias.size() * 3 +
                                                  l.cached_input.size() + l.output.size() +
                                                  l.grad_input.size());
            } else {
              scalars += static_cast<std::size_t>(l.cached_input.size() + l.output.size() +
                                                  l.grad_input.size());
            }
          },
          layer);
    }
    scalars += 3 * output_size();  // loss probabilities, gradient, classify scratch
    return scalars * sizeof(Scalar);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
      if (const auto* fc = std::get_if<FullyConnectedLayer<Scalar>>(&layer)) {
        n += static_cast<std::size_t>(fc->weights.size() + fc->bias.size());
      }
    }
    return n;
  }

 private:
  static std::size_t layer_in(const Layer<Scalar>& layer) {
    return std::visit(
        [](const auto& l) -> std::size_t {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, FullyConnectedLayer<Scalar>>) return l.in_size();
          else return l.width();
        },
        layer);
  }
  static std::size_t layer_out(const Layer<Scalar>& layer) {
    return std::visit(
        [](const auto& l) -> std::size_t {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, FullyConnectedLayer<Scalar>>) return l.out_size();
          else return l.width();
        },
        layer);
  }

  void append(Layer<Scalar> layer) {
    if (!layers_.empty() && layer_out(layers_.back()) != layer_in(layer)) {
      throw ShapeError("layer input " + std::to_string(layer_in(layer)) +
                       " does not match previous output " + std::to_string(output_size()));
    }
    layers_.push_back(std::move(layer));
    forward_pending_ = false;
  }

  void check_input(const MatrixX<Scalar>& input) const {
    if (layers_.empty()) throw StateError("network has no layers");
    if (input.rows() != static_cast<Eigen::Index>(input_size()) || input.cols() != 1) {
      throw ShapeError("input " + shape_string(input) + " does not match network input " +
                       std::to_string(input_size()) + "x1");
    }
  }

  std::vector<Layer<Scalar>> layers_;
  CrossEntropyLoss<Scalar> loss_;
  SgdOptimizer<Scalar> optimizer_;
  MatrixX<Scalar> scratch_probabilities_;
  bool forward_pending_ = false;
};

template <typename Scalar>
void SgdOptimizer<Scalar>::prepare(const Network<Scalar>& net) {
  std::size_t expected = 0;
  for (const auto& layer : net.layers()) {
    if (std::holds_alternative<FullyConnectedLayer<Scalar>>(layer)) expected += 2;
  }
  if (velocities_.size() == expected) return;
  velocities_.clear();
  for (const auto& layer : net.layers()) {
    if (const auto* fc = std::get_if<FullyConnectedLayer<Scalar>>(&layer)) {
      velocities_.push_back(MatrixX<Scalar>::Zero(fc->weights.rows(), fc->weights.cols()));
      velocities_.push_back(MatrixX<Scalar>::Zero(fc->bias.rows(), fc->bias.cols()));
    }
  }
}

template <typename Scalar>
void SgdOptimizer<Scalar>::step(Network<Scalar>& net) {
  prepare(net);
  std::size_t v = 0;
  for (auto& layer : net.layers()) {
    auto* fc = std::get_if<FullyConnectedLayer<Scalar>>(&layer);
    if (fc == nullptr) continue;
    auto& vw = velocities_[v++];
    auto& vb = velocities_[v++];
    vw = momentum_ * vw - learning_rate_ * fc->grad_weights;
    vb = momentum_ * vb - learning_rate_ * fc->grad_bias;
    fc->weights += vw;
    fc->bias += vb;
    fc->grad_weights.setZero();
    fc->grad_bias.setZero();
  }
}

/// Column vector view of a feature row.
template <typename Scalar, typename Range>
MatrixX<Scalar> column(const Range& values) {
  MatrixX<Scalar> col(static_cast<Eigen::Index>(std::size(values)), 1);
  Eigen::Index i = 0;
  for (auto v : values) col(i++, 0) = static_cast<Scalar>(v);
  return col;
}

inline const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::fully_connected:
      return "fully_connected";
    case LayerKind::sigmoid:
      return "sigmoid";
    case LayerKind::relu:
      return "relu";
  }
  return "unknown";
}

}  // namespace kml::nn
