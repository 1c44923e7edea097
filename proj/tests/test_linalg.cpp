#include <doctest.h>

#include "dcca/error.hpp"
#include "dcca/linalg.hpp"
#include "test_util.hpp"

#include <vector>

using namespace dcca;
using testutil::max_abs;

TEST_CASE("covariance small examples") {
  Matrix X(2, 1);
  X << 1, -1;
  CHECK(covariance(X, X)(0, 0) == doctest::Approx(2.0));

  Matrix A(3, 1), B(3, 1);
  A << 1, 2, 3;
  B << 1, 2, 4;
  CHECK(covariance(A, B)(0, 0) == doctest::Approx(1.5).epsilon(1e-14));

  Matrix C(4, 2);
  C << 1, 7, 2, 7, 3, 7, 5, 7;
  const Matrix S = covariance(C, C);
  CHECK(S(1, 0) == 0.0);
  CHECK(S(0, 1) == 0.0);
  CHECK(S(1, 1) == 0.0);
}

TEST_CASE("covariance errors") {
  Matrix one(1, 2);
  one << 1, 2;
  CHECK_THROWS_AS(covariance(one, one), Error);
  try {
    covariance(one, one);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
  Matrix a(3, 1), b(4, 1);
  a.setOnes();
  b.setOnes();
  try {
    covariance(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
  }
}

TEST_CASE("covariance pre-centred flag skips centring") {
  std::mt19937_64 rng(1);
  Matrix X = testutil::randn(50, 3, rng);
  const Matrix Xc = center_columns(X);
  CHECK(max_abs(covariance(Xc, Xc, true) - covariance(X, X)) < 1e-12);
  CHECK(max_abs(covariance(X, X, true) - X.transpose() * X / 49.0) < 1e-12);
}

TEST_CASE("inv_sqrt_sym examples") {
  const Matrix I = Matrix::Identity(3, 3);
  CHECK(max_abs(inv_sqrt_sym(I, 0.0).value - I) < 1e-14);

  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 4;
  D(1, 1) = 9;
  const Matrix W = inv_sqrt_sym(D, 0.0).value;
  CHECK(W(0, 0) == doctest::Approx(0.5));
  CHECK(W(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(W(0, 1)) < 1e-15);
}

TEST_CASE("inv_sqrt_sym properties on random SPD") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = testutil::random_spd(6, rng);
    const auto r = inv_sqrt_sym(A, 0.0);
    CHECK(r.clamped == 0);
    CHECK(max_abs(r.value - r.value.transpose()) <= 1e-10);
    const Matrix I = Matrix::Identity(6, 6);
    CHECK(max_abs(r.value * A * r.value - I) < 1e-8);
    CHECK(max_abs(r.value * r.value * A - I) < 1e-7);
  }
}

TEST_CASE("inv_sqrt_sym ridge and clamping") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  const auto r = inv_sqrt_sym(A, 0.0);
  CHECK(r.clamped == 1);
  CHECK(r.singular());
  CHECK(r.value.allFinite());

  const auto rr = inv_sqrt_sym(A, 3.0);
  CHECK(rr.clamped == 0);
  CHECK(rr.value(0, 0) == doctest::Approx(0.5));
  CHECK(rr.value(1, 1) == doctest::Approx(1.0 / std::sqrt(3.0)));

  Matrix N(2, 2);
  N << 1, 2, 0, 1;
  try {
    inv_sqrt_sym(N, 0.0);
    FAIL("expected symmetry error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::symmetry);
  }
  CHECK_THROWS_AS(inv_sqrt_sym(Matrix::Identity(2, 2), -1.0), Error);
}

TEST_CASE("ridge resolution") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 2;
  A(1, 1) = 4;
  CHECK(Ridge::relative(0.5).resolve(A) == doctest::Approx(1.5));
  CHECK(Ridge::absolute(0.25).resolve(A) == 0.25);
  CHECK(Ridge::none().resolve(A) == 0.0);
  CHECK_THROWS_AS(Ridge::relative(-1.0), Error);
}

TEST_CASE("svd examples") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 3;
  A(1, 1) = 1;
  const auto s = svd(A);
  CHECK(s.singular_values[0] == doctest::Approx(3.0));
  CHECK(s.singular_values[1] == doctest::Approx(1.0));
  CHECK(max_abs(s.U - Matrix::Identity(2, 2)) < 1e-14);
  CHECK(max_abs(s.V - Matrix::Identity(2, 2)) < 1e-14);

  const auto z = svd(Matrix::Zero(3, 2));
  CHECK(z.singular_values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("svd reconstruction, orthonormality, sign convention") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = testutil::randn(5, 3, rng);
    const auto s = svd(A);
    const Matrix R = s.U * s.singular_values.asDiagonal() * s.V.transpose();
    CHECK((R - A).norm() / A.norm() < 1e-8);
    CHECK(max_abs(s.U.transpose() * s.U - Matrix::Identity(3, 3)) < 1e-10);
    CHECK(max_abs(s.V.transpose() * s.V - Matrix::Identity(3, 3)) < 1e-10);
    for (Index i = 1; i < 3; ++i) CHECK(s.singular_values[i] <= s.singular_values[i - 1]);
    for (Index j = 0; j < 3; ++j) {
      Index k;
      s.U.col(j).cwiseAbs().maxCoeff(&k);
      CHECK(s.U(k, j) >= 0.0);
    }
  }
}

TEST_CASE("svd singular values invariant under row permutation") {
  std::mt19937_64 rng(4);
  const Matrix A = testutil::randn(6, 4, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(6);
  P.setIdentity();
  std::shuffle(P.indices().data(), P.indices().data() + 6, rng);
  const Matrix PA = P * A;
  const auto s1 = svd(A);
  const auto s2 = svd(PA);
  CHECK(max_abs(s1.singular_values - s2.singular_values) < 1e-10);
  CHECK(max_abs(P * s1.U * s1.singular_values.asDiagonal() * s1.V.transpose() - PA) < 1e-10);
}

TEST_CASE("sym_eig residual and orthonormality") {
  std::mt19937_64 rng(5);
  const Matrix A = testutil::random_spd(7, rng);
  const auto e = sym_eig(A);
  for (Index i = 1; i < 7; ++i) CHECK(e.eigenvalues[i] <= e.eigenvalues[i - 1]);
  CHECK(max_abs(e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(7, 7)) < 1e-10);
  for (Index i = 0; i < 7; ++i) {
    const Vector r = A * e.eigenvectors.col(i) - e.eigenvalues[i] * e.eigenvectors.col(i);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-8 * max_abs(A));
  }
}

TEST_CASE("generalized_sym_eig reductions") {
  const Matrix I = Matrix::Identity(4, 4);
  const auto g = generalized_sym_eig(I, I, Ridge::none());
  CHECK(max_abs(g.eigenvalues - Vector::Ones(4)) < 1e-12);

  std::mt19937_64 rng(6);
  Matrix R = testutil::randn(5, 5, rng);
  R = (R + R.transpose()).eval();
  const auto ge = generalized_sym_eig(R, Matrix::Identity(5, 5), Ridge::none());
  const auto se = sym_eig(R);
  CHECK(max_abs(ge.eigenvalues - se.eigenvalues) < 1e-9);

  CHECK_THROWS_AS(generalized_sym_eig(R, Matrix::Identity(4, 4), Ridge::none()), Error);
}

TEST_CASE("generalized_sym_eig residual with SPD D") {
  std::mt19937_64 rng(8);
  Matrix R = testutil::randn(6, 6, rng);
  R = (R + R.transpose()).eval();
  const Matrix D = testutil::random_spd(6, rng);
  const auto g = generalized_sym_eig(R, D, Ridge::none());
  for (Index i = 0; i < 6; ++i) {
    const Vector v = g.eigenvectors.col(i);
    const Vector r = R * v - g.eigenvalues[i] * D * v;
    CHECK(r.norm() <= 1e-7 * (R * v).norm() + 1e-12);
  }
  CHECK(max_abs(g.eigenvectors.transpose() * D * g.eigenvectors - Matrix::Identity(6, 6)) < 1e-8);
}

TEST_CASE("canonicalize_signs flips the partner too") {
  Matrix M(2, 1), P(2, 1);
  M << 0.1, -0.9;
  P << 1, 2;
  canonicalize_signs(M, &P);
  CHECK(M(1, 0) == doctest::Approx(0.9));
  CHECK(P(0, 0) == -1);
}
