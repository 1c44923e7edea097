#pragma once

#include "dcca/linalg.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace dcca {

using Rng = std::mt19937_64;

enum class ActivationKind { linear, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::linear;
  double slope = 0.1;  // negative-side slope of leaky ReLU

  static Activation linear() { return {ActivationKind::linear, 0.0}; }
  static Activation leaky_relu(double slope = 0.1) { return {ActivationKind::leaky_relu, slope}; }
};

struct DenseLayer {
  Matrix weights;  // in x out
  Vector bias;     // out
  Activation activation;
  double dropout = 0.0;  // applied to this layer's output in train mode

  Index in_dim() const { return weights.rows(); }
  Index out_dim() const { return weights.cols(); }
};

struct DenseNetwork {
  std::vector<DenseLayer> layers;
  std::uint64_t rng_seed = 0;

  Index input_dim() const { return layers.front().in_dim(); }
  Index output_dim() const { return layers.back().out_dim(); }
  Index parameter_count() const;
  // Throws a state error when consecutive layers do not chain.
  void validate() const;
};

struct NetworkShape {
  Index input = 1;
  std::vector<Index> hidden;
  Index output = 1;
  Activation hidden_activation = Activation::leaky_relu();
  Activation output_activation = Activation::linear();
  double dropout = 0.0;  // hidden layers only
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
DenseNetwork make_network(const NetworkShape& shape, std::uint64_t seed);

enum class Mode { train, eval };

struct ForwardTape {
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> masks;           // empty matrix when no dropout was applied
};

struct Forward {
  Matrix output;
  ForwardTape tape;
};

// Train mode samples inverted-dropout masks from `rng`; eval mode is
// deterministic and needs no rng.
Forward forward(const DenseNetwork& net, const Matrix& X, Mode mode, Rng* rng = nullptr);
// Train-mode pass with caller-supplied masks (one per layer, empty = none).
Forward forward_with_masks(const DenseNetwork& net, const Matrix& X,
                           const std::vector<Matrix>& masks);
Matrix predict(const DenseNetwork& net, const Matrix& X);

struct LayerGradient {
  Matrix weights;
  Vector bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Matrix input;  // dL/dX

  static Gradients zeros_like(const DenseNetwork& net);
  Gradients& operator+=(const Gradients& other);
  bool all_finite() const;
};

Gradients backward(const DenseNetwork& net, const ForwardTape& tape, const Matrix& dL_dH);

// theta <- theta + eta * grad.
DenseNetwork ascend(DenseNetwork net, const Gradients& grads, double eta);

}  // namespace dcca
