#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>

namespace dcca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Ridge added to a symmetric matrix before whitening. A relative ridge is
// scaled by trace(A)/p of the matrix it is applied to.
class Ridge {
 public:
  static Ridge none() { return Ridge(0.0, false); }
  static Ridge absolute(double value);
  static Ridge relative(double factor);

  double resolve(const Matrix& A) const;
  double value() const { return value_; }
  bool is_relative() const { return relative_; }

 private:
  Ridge(double value, bool relative) : value_(value), relative_(relative) {}
  double value_;
  bool relative_;
};

// Eigenvalues below this fraction of the largest are clamped before the
// inverse square root.
inline constexpr double kEigenFloor = 1e-10;

struct SymEigResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
  Index clamped = 0;    // eigenvalues floored while whitening (generalized case)
};

struct SvdResult {
  Matrix U;
  Vector singular_values;  // descending, non-negative
  Matrix V;
};

struct InvSqrtResult {
  Matrix value;
  double ridge = 0.0;
  Index clamped = 0;  // eigenvalues raised to the floor
  bool singular() const { return clamped > 0; }
};

void require_finite(const Matrix& A, std::string_view what);
void require_symmetric(const Matrix& A, std::string_view what);

Vector column_means(const Matrix& X);
Matrix center_columns(const Matrix& X);

// (1/(m-1)) * Xc^T Yc, with Xc/Yc column-centred unless `centered` says the
// inputs already are.
Matrix covariance(const Matrix& X, const Matrix& Y, bool centered = false);
// Covariance of X with itself, symmetric to the last bit.
Matrix auto_covariance(const Matrix& X, bool centered = false);

SymEigResult sym_eig(const Matrix& A);
InvSqrtResult inv_sqrt_sym(const Matrix& A, double ridge);
SvdResult svd(const Matrix& A);

// Solves R v = lambda D v by whitening with D^{-1/2}. When `blocks` is given,
// D is treated as block diagonal with those block sizes and the ridge is
// resolved per block. Eigenvectors are D-orthonormal.
SymEigResult generalized_sym_eig(const Matrix& R, const Matrix& D, const Ridge& ridge,
                                 std::span<const Index> blocks = {});

// Flips each column so its largest-magnitude entry is non-negative. When
// `partner` is given its columns are flipped along with `M`.
void canonicalize_signs(Matrix& M, Matrix* partner = nullptr);

}  // namespace dcca
