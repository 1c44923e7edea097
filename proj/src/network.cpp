#include "dcca/network.hpp"

#include "dcca/error.hpp"

#include <cmath>
#include <string>

namespace dcca {

namespace {

Matrix activate(const Matrix& Z, const Activation& a) {
  if (a.kind == ActivationKind::linear) return Z;
  const double slope = a.slope;
  return Z.unaryExpr([slope](double z) { return z > 0.0 ? z : slope * z; });
}

Matrix activation_derivative(const Matrix& Z, const Activation& a) {
  if (a.kind == ActivationKind::linear) return Matrix::Ones(Z.rows(), Z.cols());
  const double slope = a.slope;
  return Z.unaryExpr([slope](double z) { return z > 0.0 ? 1.0 : slope; });
}

Matrix sample_mask(Index rows, Index cols, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) mask(i, j) = keep(rng) ? scale : 0.0;
  }
  return mask;
}

Forward run(const DenseNetwork& net, const Matrix& X, const std::vector<Matrix>* masks,
            Mode mode, Rng* rng) {
  net.validate();
  require(X.cols() == net.input_dim(), ErrorKind::shape,
          "network expects " + std::to_string(net.input_dim()) + " inputs, got " +
              std::to_string(X.cols()));
  Forward out;
  const std::size_t L = net.layers.size();
  out.tape.inputs.reserve(L);
  out.tape.pre_activations.reserve(L);
  out.tape.masks.reserve(L);
  Matrix A = X;
  for (std::size_t k = 0; k < L; ++k) {
    const DenseLayer& layer = net.layers[k];
    Matrix Z = A * layer.weights;
    Z.rowwise() += layer.bias.transpose();
    Matrix next = activate(Z, layer.activation);
    Matrix mask;
    if (masks != nullptr) {
      mask = (*masks)[k];
      if (mask.size() > 0) {
        require(mask.rows() == next.rows() && mask.cols() == next.cols(), ErrorKind::shape,
                "dropout mask shape mismatch");
      }
    } else if (mode == Mode::train && layer.dropout > 0.0) {
      require(rng != nullptr, ErrorKind::state, "train-mode dropout needs an rng");
      mask = sample_mask(next.rows(), next.cols(), layer.dropout, *rng);
    }
    if (mask.size() > 0) next = next.cwiseProduct(mask);
    out.tape.inputs.push_back(std::move(A));
    out.tape.pre_activations.push_back(std::move(Z));
    out.tape.masks.push_back(std::move(mask));
    A = std::move(next);
  }
  out.output = std::move(A);
  return out;
}

}  // namespace

Index DenseNetwork::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void DenseNetwork::validate() const {
  require(!layers.empty(), ErrorKind::state, "network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    require(l.bias.size() == l.out_dim(), ErrorKind::state,
            "layer " + std::to_string(k) + " bias size mismatch");
    require(l.dropout >= 0.0 && l.dropout < 1.0, ErrorKind::state,
            "layer " + std::to_string(k) + " dropout outside [0, 1)");
    if (k > 0) {
      require(layers[k - 1].out_dim() == l.in_dim(), ErrorKind::state,
              "layer " + std::to_string(k) + " does not chain with its predecessor");
    }
  }
}

DenseNetwork make_network(const NetworkShape& shape, std::uint64_t seed) {
  require(shape.input >= 1 && shape.output >= 1, ErrorKind::config, "network dims must be >= 1");
  require(shape.dropout >= 0.0 && shape.dropout < 1.0, ErrorKind::config,
          "dropout must lie in [0, 1)");
  DenseNetwork net;
  net.rng_seed = seed;
  Rng rng(seed);
  std::vector<Index> dims{shape.input};
  dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
  dims.push_back(shape.output);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    require(dims[k + 1] >= 1, ErrorKind::config, "hidden layer width must be >= 1");
    const bool last = k + 2 == dims.size();
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[k] + dims[k + 1]));
    std::uniform_real_distribution<double> uni(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(dims[k], dims[k + 1]);
    for (Index j = 0; j < layer.weights.cols(); ++j) {
      for (Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = uni(rng);
    }
    layer.bias = Vector::Zero(dims[k + 1]);
    layer.activation = last ? shape.output_activation : shape.hidden_activation;
    layer.dropout = last ? 0.0 : shape.dropout;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Forward forward(const DenseNetwork& net, const Matrix& X, Mode mode, Rng* rng) {
  return run(net, X, nullptr, mode, rng);
}

Forward forward_with_masks(const DenseNetwork& net, const Matrix& X,
                           const std::vector<Matrix>& masks) {
  require(masks.size() == net.layers.size(), ErrorKind::shape, "one mask per layer expected");
  return run(net, X, &masks, Mode::train, nullptr);
}

Matrix predict(const DenseNetwork& net, const Matrix& X) {
  return run(net, X, nullptr, Mode::eval, nullptr).output;
}

Gradients Gradients::zeros_like(const DenseNetwork& net) {
  Gradients g;
  for (const auto& l : net.layers) {
    g.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  require(layers.size() == other.layers.size(), ErrorKind::shape, "gradient layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weights += other.layers[k].weights;
    layers[k].bias += other.layers[k].bias;
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

Gradients backward(const DenseNetwork& net, const ForwardTape& tape, const Matrix& dL_dH) {
  net.validate();
  const std::size_t L = net.layers.size();
  require(tape.inputs.size() == L && tape.pre_activations.size() == L && tape.masks.size() == L,
          ErrorKind::state, "tape does not match the network");
  const Matrix& last = tape.pre_activations.back();
  require(dL_dH.rows() == last.rows() && dL_dH.cols() == last.cols(), ErrorKind::shape,
          "upstream gradient does not match the forward output");

  Gradients grads;
  grads.layers.resize(L);
  Matrix G = dL_dH;
  for (std::size_t k = L; k-- > 0;) {
    const DenseLayer& layer = net.layers[k];
    require(tape.pre_activations[k].cols() == layer.out_dim() &&
                tape.inputs[k].cols() == layer.in_dim(),
            ErrorKind::state, "tape layer " + std::to_string(k) + " does not match the network");
    if (tape.masks[k].size() > 0) G = G.cwiseProduct(tape.masks[k]);
    if (layer.activation.kind != ActivationKind::linear) {
      G = G.cwiseProduct(activation_derivative(tape.pre_activations[k], layer.activation));
    }
    grads.layers[k].weights = tape.inputs[k].transpose() * G;
    grads.layers[k].bias = G.colwise().sum().transpose();
    G = G * layer.weights.transpose();
  }
  grads.input = std::move(G);
  return grads;
}

DenseNetwork ascend(DenseNetwork net, const Gradients& grads, double eta) {
  require(std::isfinite(eta) && eta >= 0.0, ErrorKind::config, "learning rate must be >= 0");
  require(grads.layers.size() == net.layers.size(), ErrorKind::state,
          "gradients do not match the network");
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    const auto& g = grads.layers[k];
    require(g.weights.allFinite() && g.bias.allFinite(), ErrorKind::numeric,
            "non-finite gradient in layer " + std::to_string(k) +
                " (max |dW| = " + std::to_string(g.weights.cwiseAbs().maxCoeff()) + ")");
    require(g.weights.rows() == net.layers[k].weights.rows() &&
                g.weights.cols() == net.layers[k].weights.cols(),
            ErrorKind::shape, "gradient shape mismatch in layer " + std::to_string(k));
    net.layers[k].weights += eta * g.weights;
    net.layers[k].bias += eta * g.bias;
  }
  return net;
}

}  // namespace dcca
