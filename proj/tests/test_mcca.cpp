#include <doctest.h>

#include "dcca/error.hpp"
#include "dcca/linear_cca.hpp"
#include "dcca/mcca.hpp"
#include "test_util.hpp"

using namespace dcca;
using testutil::corr;
using testutil::max_abs;
using testutil::randn;

namespace {

std::vector<Matrix> latent_views(Index m, const std::vector<Index>& dims, double noise,
                                 Matrix* latent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix z = randn(m, 1, rng);
  std::vector<Matrix> views;
  for (Index d : dims) {
    Matrix a = randn(1, d, rng);
    a /= a.norm();
    views.push_back(z * a + noise * randn(m, d, rng));
  }
  if (latent) *latent = z;
  return views;
}

}  // namespace

TEST_CASE("identical views have unit ISC") {
  std::mt19937_64 rng(1);
  const Matrix X = randn(300, 3, rng);
  const std::vector<Matrix> views{X, X, X};
  const auto model = fit_mcca(views, 1);
  const auto P = project_all(model, views);
  CHECK(std::abs(isc(P, 0) - 1.0) < 1e-6);
  CHECK(std::abs(fit_mcca(views, 1, Ridge::none()).isc()[0] - 1.0) < 1e-9);
}

TEST_CASE("two views reduce to linear CCA") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto views = latent_views(500, {4, 3}, 1.0, nullptr, seed);
    const auto mc = fit_mcca(views, 1);
    const auto lc = fit_cca(views[0], views[1], 1);
    CHECK(std::abs(mc.isc()[0] - lc.canon_corr[0]) < 1e-6);
  }
}

TEST_CASE("isc examples") {
  std::mt19937_64 rng(2);
  const Matrix a = randn(100, 2, rng);
  const std::vector<Matrix> same{a, a, a, a};
  CHECK(std::abs(isc(same, 1) - 1.0) < 1e-10);
  const std::vector<Matrix> neg{a, Matrix(-a)};
  CHECK(isc(neg, 0) == doctest::Approx(-1.0));

  const std::vector<Matrix> indep{randn(100000, 1, rng), randn(100000, 1, rng), randn(100000, 1, rng)};
  CHECK(std::abs(isc(indep, 0)) <= 0.02);

  const std::vector<Matrix> flat{Matrix::Ones(10, 1), Matrix::Ones(10, 1)};
  try {
    isc(flat, 0);
    FAIL("expected degenerate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
}

TEST_CASE("eigenvalue ISC matches measured ISC and residual is small") {
  auto views = latent_views(2000, {5, 4, 6}, 1.5, nullptr, 3);
  const auto model = fit_mcca(views, 3, Ridge::none());
  const auto P = project_all(model, views);
  for (Index k = 0; k < 3; ++k) {
    CHECK(std::abs(isc(P, k) - model.isc()[k]) < 1e-6);
    if (k > 0) CHECK(model.eigenvalues[k] <= model.eigenvalues[k - 1]);
  }

  // R v = lambda D v for the stacked top vector.
  Matrix all(2000, 15);
  all << views[0], views[1], views[2];
  const Matrix C = auto_covariance(all);
  Matrix D = Matrix::Zero(15, 15);
  Index off = 0;
  for (Index d : model.view_dims) {
    D.block(off, off, d, d) = C.block(off, off, d, d);
    off += d;
  }
  Vector v(15);
  v << model.proj[0].col(0), model.proj[1].col(0), model.proj[2].col(0);
  const Vector r = C * v - model.eigenvalues[0] * D * v;
  CHECK(r.norm() <= 1e-7 * (C * v).norm());
}

TEST_CASE("top ISC beats random projections") {
  auto views = latent_views(3000, {4, 4, 4}, 1.0, nullptr, 4);
  const auto model = fit_mcca(views, 1, Ridge::none());
  const double best = isc(project_all(model, views), 0);
  std::mt19937_64 rng(44);
  for (int t = 0; t < 100; ++t) {
    std::vector<Matrix> P;
    for (const auto& v : views) {
      Vector w = randn(4, 1, rng);
      w /= w.norm();
      P.push_back(v * w);
    }
    CHECK(isc(P, 0) <= best + 1e-12);
  }
}

TEST_CASE("permuting views permutes transforms") {
  auto views = latent_views(1000, {3, 4, 5}, 1.0, nullptr, 5);
  const auto a = fit_mcca(views, 2);
  const std::vector<Matrix> perm{views[2], views[0], views[1]};
  const auto b = fit_mcca(perm, 2);
  CHECK(max_abs(a.eigenvalues - b.eigenvalues) < 1e-9);
  // Columns agree up to a common sign per dimension.
  for (Index k = 0; k < 2; ++k) {
    const double s = a.proj[0].col(k).dot(b.proj[1].col(k)) >= 0 ? 1.0 : -1.0;
    CHECK(max_abs(a.proj[0].col(k) - s * b.proj[1].col(k)) < 1e-6);
    CHECK(max_abs(a.proj[2].col(k) - s * b.proj[0].col(k)) < 1e-6);
  }
}

TEST_CASE("denoise round trip and shapes") {
  std::mt19937_64 rng(6);
  const std::vector<Matrix> views{randn(200, 3, rng), randn(200, 3, rng)};
  const auto model = fit_mcca(views, 3);
  CHECK(max_abs(denoise(model, 0, views[0], true) - views[0]) < 1e-6);
  CHECK(denoise(model, 1, views[1], false).cols() == 3);
  CHECK_THROWS_AS(denoise(model, 0, randn(5, 2, rng), true), Error);
  CHECK_THROWS_AS(fit_mcca(views, 4), Error);
  const std::vector<Matrix> bad{randn(200, 3, rng), randn(199, 3, rng)};
  CHECK_THROWS_AS(fit_mcca(bad, 1), Error);
}

TEST_CASE("multiway recovery beats any single view at 0 dB") {
  Matrix z;
  // unit-norm mixing and unit noise: 0 dB along the latent direction
  auto views = latent_views(50000, {16, 16, 16, 8}, 1.0, &z, 7);
  const auto model = fit_mcca(views, 1);
  const auto P = project_all(model, views);
  // Best raw channel, and best linear read-out of any single view.
  double best_channel = 0, best_single = 0;
  for (const auto& v : views) {
    for (Index c = 0; c < v.cols(); ++c)
      best_channel = std::max(best_channel, std::abs(corr(v.col(c), z.col(0))));
    best_single = std::max(best_single, fit_cca(v, z, 1).canon_corr[0]);
  }
  for (const auto& p : P) CHECK(std::abs(corr(p.col(0), z.col(0))) >= best_channel);
  Vector avg = Vector::Zero(50000);
  for (const auto& p : P) avg += p.col(0);
  CHECK(std::abs(corr(avg, z.col(0))) > best_single);

  const Matrix den = denoise(model, 0, views[0], true);
  CHECK(std::abs(corr(den.col(0), z.col(0))) > std::abs(corr(views[0].col(0), z.col(0))));
}
