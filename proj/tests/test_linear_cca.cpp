#include <doctest.h>

#include "dcca/error.hpp"
#include "dcca/linear_cca.hpp"
#include "test_util.hpp"

#include <numbers>

using namespace dcca;
using testutil::corr;
using testutil::max_abs;
using testutil::randn;

namespace {

// x = z a^T + s N, y = z b^T + s N: the best linear correlation of x with z
// is |a|/sqrt(|a|^2 + s^2), and the top canonical correlation is the product
// of the two view-latent correlations.
struct SharedLatent {
  Matrix X, Y;
  double rho;
};

SharedLatent shared_latent(Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector a(3), b(2);
  a << 1.0, -0.5, 0.25;
  b << 0.3, 0.6;
  const double sx = 1.2, sy = 0.8;
  const Matrix z = randn(m, 1, rng);
  SharedLatent s;
  s.X = z * a.transpose() + sx * randn(m, 3, rng);
  s.Y = z * b.transpose() + sy * randn(m, 2, rng);
  const double rx = a.norm() / std::sqrt(a.squaredNorm() + sx * sx);
  const double ry = b.norm() / std::sqrt(b.squaredNorm() + sy * sy);
  s.rho = rx * ry;
  return s;
}

}  // namespace

TEST_CASE("identical and rotated views give unit correlations") {
  std::mt19937_64 rng(1);
  const Matrix X = randn(400, 4, rng);
  const auto m1 = fit_cca(X, X, 4, Ridge::none());
  CHECK(max_abs(m1.canon_corr - Vector::Ones(4)) < 1e-8);

  const Matrix Q = randn(4, 4, rng).householderQr().householderQ();
  const auto m2 = fit_cca(X, X * Q, 3, Ridge::none());
  CHECK(max_abs(m2.canon_corr - Vector::Ones(3)) < 1e-8);
}

TEST_CASE("shared latent population correlation") {
  const auto s = shared_latent(100000, 2);
  const auto model = fit_cca(s.X, s.Y, 1);
  CHECK(std::abs(model.canon_corr[0] - s.rho) < 0.02);

  const auto held = shared_latent(100000, 3);
  const Matrix u = project(model, held.X, View::stimulus);
  const Matrix v = project(model, held.Y, View::response);
  CHECK(std::abs(corr(u.col(0), v.col(0)) - model.canon_corr[0]) < 0.05);
}

TEST_CASE("canon_corr equals correlation of projections, dims uncorrelated") {
  std::mt19937_64 rng(4);
  const Matrix Z = randn(2000, 2, rng);
  const Matrix X = Z * randn(2, 5, rng) + randn(2000, 5, rng);
  const Matrix Y = Z * randn(2, 4, rng) + randn(2000, 4, rng);
  const auto model = fit_cca(X, Y, 3, Ridge::none());
  const Matrix U = project(model, X, View::stimulus);
  const Matrix V = project(model, Y, View::response);
  for (Index k = 0; k < 3; ++k) {
    CHECK(std::abs(corr(U.col(k), V.col(k)) - model.canon_corr[k]) < 1e-8);
    if (k > 0) CHECK(model.canon_corr[k] <= model.canon_corr[k - 1]);
    CHECK(model.canon_corr[k] >= -1e-9);
    CHECK(model.canon_corr[k] <= 1 + 1e-9);
  }
  for (Index j = 0; j < 3; ++j)
    for (Index k = j + 1; k < 3; ++k) {
      CHECK(std::abs(corr(U.col(j), U.col(k))) < 1e-6);
      CHECK(std::abs(corr(V.col(j), V.col(k))) < 1e-6);
    }
}

TEST_CASE("positive diagonal scaling leaves canon_corr unchanged") {
  std::mt19937_64 rng(5);
  const Matrix Z = randn(1000, 1, rng);
  const Matrix X = Z * randn(1, 3, rng) + randn(1000, 3, rng);
  const Matrix Y = Z * randn(1, 3, rng) + randn(1000, 3, rng);
  Vector s(3);
  s << 0.01, 7.0, 300.0;
  const auto a = fit_cca(X, Y, 3, Ridge::none());
  const auto b = fit_cca(X * s.asDiagonal(), Y, 3, Ridge::none());
  CHECK(max_abs(a.canon_corr - b.canon_corr) < 1e-8);
}

TEST_CASE("brute-force direction grid agrees at D1 = D2 = 2") {
  std::mt19937_64 rng(6);
  const Matrix Z = randn(500, 1, rng);
  const Matrix X = Z * randn(1, 2, rng) + randn(500, 2, rng);
  const Matrix Y = Z * randn(1, 2, rng) + randn(500, 2, rng);
  const auto model = fit_cca(X, Y, 1, Ridge::none());
  const Matrix Xc = X.rowwise() - X.colwise().mean();
  const Matrix Yc = Y.rowwise() - Y.colwise().mean();
  const Matrix Cxx = Xc.transpose() * Xc, Cyy = Yc.transpose() * Yc, Cxy = Xc.transpose() * Yc;
  double best = 0;
  for (int i = 0; i < 180; ++i) {
    const double ti = i * std::numbers::pi / 180;
    const Eigen::Vector2d u(std::cos(ti), std::sin(ti));
    for (int j = 0; j < 180; ++j) {
      const double tj = j * std::numbers::pi / 180;
      const Eigen::Vector2d v(std::cos(tj), std::sin(tj));
      const double r = (u.transpose() * Cxy * v)(0) /
                       std::sqrt((u.transpose() * Cxx * u)(0) * (v.transpose() * Cyy * v)(0));
      best = std::max(best, std::abs(r));
    }
  }
  CHECK(std::abs(best - model.canon_corr[0]) < 1e-3);
}

TEST_CASE("fit_cca errors") {
  std::mt19937_64 rng(7);
  const Matrix X = randn(10, 3, rng);
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::state;
  };
  CHECK(kind([&] { fit_cca(X, X, 0); }) == ErrorKind::config);
  CHECK(kind([&] { fit_cca(X, X, 4); }) == ErrorKind::config);
  CHECK(kind([&] { fit_cca(X.topRows(3), X.topRows(3), 1); }) == ErrorKind::degenerate);
  CHECK(kind([&] { fit_cca(X, X.topRows(9), 1); }) == ErrorKind::shape);
  const auto model = fit_cca(X, X, 1);
  CHECK(kind([&] { project(model, randn(5, 2, rng), View::stimulus); }) == ErrorKind::shape);
}

TEST_CASE("rows with equal inputs project to equal values") {
  std::mt19937_64 rng(8);
  Matrix X = randn(100, 2, rng);
  const auto model = fit_cca(X, randn(100, 2, rng), 1);
  Matrix Q(3, 2);
  Q.setConstant(0.7);
  const Matrix P = project(model, Q, View::stimulus);
  CHECK(P(0, 0) == P(1, 0));
  CHECK(P(1, 0) == P(2, 0));
}
