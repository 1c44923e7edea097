#include <doctest.h>

#include "dcca/error.hpp"
#include "dcca/network.hpp"
#include "test_util.hpp"

using namespace dcca;
using testutil::max_abs;
using testutil::randn;

namespace {

// Scalar probe loss sum(C .* H) so dL/dH = C.
double probe(const DenseNetwork& net, const Matrix& X, const std::vector<Matrix>& masks,
             const Matrix& C) {
  return forward_with_masks(net, X, masks).output.cwiseProduct(C).sum();
}

void gradient_check(DenseNetwork net, const Matrix& X, const std::vector<Matrix>& masks,
                    std::mt19937_64& rng) {
  const auto fw = forward_with_masks(net, X, masks);
  const Matrix C = randn(fw.output.rows(), fw.output.cols(), rng);
  const Gradients g = backward(net, fw.tape, C);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Matrix fd_w(net.layers[k].weights.rows(), net.layers[k].weights.cols());
    for (Index i = 0; i < fd_w.size(); ++i) {
      double& w = net.layers[k].weights.data()[i];
      const double w0 = w;
      w = w0 + h;
      const double up = probe(net, X, masks, C);
      w = w0 - h;
      const double dn = probe(net, X, masks, C);
      w = w0;
      fd_w.data()[i] = (up - dn) / (2 * h);
    }
    Vector fd_b(net.layers[k].bias.size());
    for (Index i = 0; i < fd_b.size(); ++i) {
      double& b = net.layers[k].bias[i];
      const double b0 = b;
      b = b0 + h;
      const double up = probe(net, X, masks, C);
      b = b0 - h;
      const double dn = probe(net, X, masks, C);
      b = b0;
      fd_b[i] = (up - dn) / (2 * h);
    }
    worst = std::max(worst, max_abs(g.layers[k].weights - fd_w) / max_abs(fd_w));
    worst = std::max(worst, max_abs(g.layers[k].bias - fd_b) / max_abs(fd_b));
  }
  CHECK(worst < 1e-6);
}

}  // namespace

TEST_CASE("identity linear layer") {
  DenseNetwork net;
  net.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3), Activation::linear(), 0.0});
  std::mt19937_64 rng(1);
  const Matrix X = randn(5, 3, rng);
  CHECK(max_abs(predict(net, X) - X) == 0.0);
}

TEST_CASE("leaky relu negative slope") {
  DenseNetwork net;
  net.layers.push_back({Matrix::Identity(1, 1), Vector::Zero(1), Activation::leaky_relu(0.1), 0.0});
  Matrix X(2, 1);
  X << -1, 2;
  const Matrix H = predict(net, X);
  CHECK(H(0, 0) == doctest::Approx(-0.1));
  CHECK(H(1, 0) == 2.0);
}

TEST_CASE("eval mode is deterministic and train mode samples masks") {
  NetworkShape shape{4, {8, 8}, 2};
  shape.dropout = 0.3;
  const auto net = make_network(shape, 5);
  std::mt19937_64 rng(2);
  const Matrix X = randn(10, 4, rng);
  const Matrix H0 = predict(net, X);
  for (int i = 0; i < 10; ++i) CHECK((predict(net, X).array() == H0.array()).all());
  Rng r1(1), r2(2);
  const Matrix A = forward(net, X, Mode::train, &r1).output;
  const Matrix B = forward(net, X, Mode::train, &r2).output;
  CHECK(max_abs(A - B) > 0.0);
  CHECK_THROWS_AS(forward(net, X, Mode::train, nullptr), Error);
}

TEST_CASE("inverted dropout preserves the expected activation") {
  DenseNetwork net;
  net.layers.push_back({Matrix::Identity(1, 1), Vector::Zero(1), Activation::linear(), 0.2});
  Matrix X = Matrix::Constant(1, 1, 1.0);
  Rng rng(3);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) sum += forward(net, X, Mode::train, &rng).output(0, 0);
  CHECK(std::abs(sum / 10000 - 1.0) < 0.02);
}

TEST_CASE("backward closed forms") {
  DenseNetwork net;
  std::mt19937_64 rng(4);
  net.layers.push_back({randn(3, 2, rng), Vector::Zero(2), Activation::linear(), 0.0});
  const Matrix X = randn(6, 3, rng);
  const auto fw = forward(net, X, Mode::eval);
  const Matrix G = randn(6, 2, rng);
  const auto g = backward(net, fw.tape, G);
  CHECK(max_abs(g.layers[0].weights - X.transpose() * G) < 1e-12);
  CHECK(max_abs(g.layers[0].bias - G.colwise().sum().transpose()) < 1e-12);

  const auto z = backward(net, fw.tape, Matrix::Zero(6, 2));
  CHECK(max_abs(z.layers[0].weights) == 0.0);
  CHECK(max_abs(z.layers[0].bias) == 0.0);
}

TEST_CASE("finite-difference gradient checks") {
  std::mt19937_64 rng(5);
  for (auto act : {Activation::linear(), Activation::leaky_relu(0.1)}) {
    NetworkShape shape{3, {5}, 2};
    shape.hidden_activation = act;
    shape.output_activation = act;
    auto net = make_network(shape, 7);
    for (auto& l : net.layers) l.bias = randn(l.bias.size(), 1, rng);
    const Matrix X = randn(9, 3, rng);
    gradient_check(net, X, {Matrix(), Matrix()}, rng);

    // fixed dropout mask on the hidden layer
    Matrix mask = Matrix::Constant(9, 5, 1.0 / 0.75);
    for (Index i = 0; i < mask.size(); i += 3) mask.data()[i] = 0.0;
    gradient_check(net, X, {mask, Matrix()}, rng);
  }
}

TEST_CASE("ascend semantics") {
  auto net = make_network({2, {3}, 1}, 1);
  const auto zero = Gradients::zeros_like(net);
  auto g = zero;
  g.layers[0].weights.setConstant(0.5);
  g.layers[1].bias.setConstant(-2.0);
  const auto same = ascend(net, g, 0.0);
  CHECK(max_abs(same.layers[0].weights - net.layers[0].weights) == 0.0);
  const auto moved = ascend(net, g, 1.0);
  CHECK(max_abs(moved.layers[0].weights - net.layers[0].weights - g.layers[0].weights) == 0.0);
  CHECK(moved.layers[1].bias[0] == net.layers[1].bias[0] - 2.0);

  g.layers[0].weights(0, 0) = std::nan("");
  try {
    ascend(net, g, 1.0);
    FAIL("expected numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
  CHECK_THROWS_AS(ascend(net, zero, -1.0), Error);
}

TEST_CASE("tape mismatch is a state error") {
  auto a = make_network({2, {3}, 1}, 1);
  auto b = make_network({2, {4}, 1}, 1);
  std::mt19937_64 rng(6);
  const auto fw = forward(a, randn(4, 2, rng), Mode::eval);
  try {
    backward(b, fw.tape, Matrix::Zero(4, 1));
    FAIL("expected state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::state);
  }
}

TEST_CASE("seeded training steps are bit-reproducible") {
  std::mt19937_64 data_rng(7);
  const Matrix X = randn(20, 3, data_rng);
  const Matrix T = randn(20, 2, data_rng);
  auto run = [&] {
    NetworkShape shape{3, {6}, 2};
    shape.dropout = 0.1;
    auto net = make_network(shape, 42);
    Rng rng(99);
    for (int s = 0; s < 5; ++s) {
      const auto fw = forward(net, X, Mode::train, &rng);
      net = ascend(net, backward(net, fw.tape, T - fw.output), 1e-2);
    }
    return net;
  };
  const auto a = run(), b = run();
  for (std::size_t k = 0; k < a.layers.size(); ++k)
    CHECK((a.layers[k].weights.array() == b.layers[k].weights.array()).all());
}
