#include "dcca/linalg.hpp"

#include "dcca/error.hpp"
#include "dcca/kernels.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace dcca {

Ridge Ridge::absolute(double value) {
  require(std::isfinite(value) && value >= 0.0, ErrorKind::config, "ridge must be >= 0");
  return Ridge(value, false);
}

Ridge Ridge::relative(double factor) {
  require(std::isfinite(factor) && factor >= 0.0, ErrorKind::config,
          "relative ridge must be >= 0");
  return Ridge(factor, true);
}

double Ridge::resolve(const Matrix& A) const {
  if (!relative_ || value_ == 0.0) return value_;
  require(A.rows() > 0, ErrorKind::shape, "ridge of an empty matrix");
  return value_ * A.trace() / static_cast<double>(A.rows());
}

void require_finite(const Matrix& A, std::string_view what) {
  require(A.allFinite(), ErrorKind::numeric, std::string(what) + " has non-finite entries");
}

void require_symmetric(const Matrix& A, std::string_view what) {
  require(A.rows() == A.cols(), ErrorKind::shape, std::string(what) + " is not square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * scale, ErrorKind::symmetry,
          std::string(what) + " is not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
}

Vector column_means(const Matrix& X) { return X.colwise().mean().transpose(); }

Matrix center_columns(const Matrix& X) {
  return X.rowwise() - X.colwise().mean();
}

Matrix covariance(const Matrix& X, const Matrix& Y, bool centered) {
  require(X.rows() == Y.rows(), ErrorKind::shape,
          "covariance inputs have " + std::to_string(X.rows()) + " and " +
              std::to_string(Y.rows()) + " rows");
  require(X.rows() >= 2, ErrorKind::degenerate, "covariance needs at least 2 samples");
  const double scale = 1.0 / static_cast<double>(X.rows() - 1);
  if (centered) return kernels::cross_product(X, Y) * scale;
  return kernels::cross_product(center_columns(X), center_columns(Y)) * scale;
}

Matrix auto_covariance(const Matrix& X, bool centered) {
  require(X.rows() >= 2, ErrorKind::degenerate, "covariance needs at least 2 samples");
  const Matrix Xc = centered ? X : center_columns(X);
  Matrix C = kernels::cross_product(Xc, Xc) / static_cast<double>(X.rows() - 1);
  return (0.5 * (C + C.transpose())).eval();
}

void canonicalize_signs(Matrix& M, Matrix* partner) {
  for (Index j = 0; j < M.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < M.rows(); ++i) {
      const double a = std::abs(M(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (M.rows() > 0 && M(arg, j) < 0.0) {
      M.col(j) *= -1.0;
      if (partner != nullptr && j < partner->cols()) partner->col(j) *= -1.0;
    }
  }
}

SymEigResult sym_eig(const Matrix& A) {
  require_symmetric(A, "sym_eig input");
  require_finite(A, "sym_eig input");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
  require(solver.info() == Eigen::Success, ErrorKind::numeric, "eigensolver did not converge");
  SymEigResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.eigenvectors);
  return out;
}

InvSqrtResult inv_sqrt_sym(const Matrix& A, double ridge) {
  require_symmetric(A, "inv_sqrt_sym input");
  require(std::isfinite(ridge) && ridge >= 0.0, ErrorKind::config, "ridge must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
  require(solver.info() == Eigen::Success, ErrorKind::numeric, "eigensolver did not converge");

  InvSqrtResult out;
  out.ridge = ridge;
  Vector lambda = solver.eigenvalues().array() + ridge;
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) {
    out.value = Matrix::Zero(A.rows(), A.cols());
    out.clamped = A.rows();
    return out;
  }
  const double floor = kEigenFloor * top;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < floor) {
      lambda[i] = floor;
      ++out.clamped;
    }
  }
  const Matrix& V = solver.eigenvectors();
  const Matrix M = V * lambda.array().rsqrt().matrix().asDiagonal() * V.transpose();
  out.value = 0.5 * (M + M.transpose());
  return out;
}

SvdResult svd(const Matrix& A) {
  require_finite(A, "svd input");
  Eigen::JacobiSVD<Matrix> solver(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  canonicalize_signs(out.U, &out.V);
  return out;
}

SymEigResult generalized_sym_eig(const Matrix& R, const Matrix& D, const Ridge& ridge,
                                 std::span<const Index> blocks) {
  require(R.rows() == R.cols() && D.rows() == D.cols() && R.rows() == D.rows(),
          ErrorKind::shape, "generalized_sym_eig needs square R and D of equal size");
  require_symmetric(R, "R");
  require_symmetric(D, "D");

  Matrix W = Matrix::Zero(D.rows(), D.cols());
  Index clamped = 0;
  if (blocks.empty()) {
    auto w = inv_sqrt_sym(D, ridge.resolve(D));
    W = std::move(w.value);
    clamped = w.clamped;
  } else {
    const Index total = std::accumulate(blocks.begin(), blocks.end(), Index{0});
    require(total == D.rows(), ErrorKind::shape, "block sizes do not sum to the matrix size");
    Index offset = 0;
    for (Index b : blocks) {
      require(b >= 1, ErrorKind::shape, "empty block");
      const Matrix Db = D.block(offset, offset, b, b);
      auto w = inv_sqrt_sym(Db, ridge.resolve(Db));
      W.block(offset, offset, b, b) = w.value;
      clamped += w.clamped;
      offset += b;
    }
  }

  Matrix M = W * R * W;
  M = 0.5 * (M + M.transpose());
  SymEigResult whitened = sym_eig(M);
  SymEigResult out;
  out.eigenvalues = std::move(whitened.eigenvalues);
  out.eigenvectors = W * whitened.eigenvectors;
  out.clamped = clamped;
  return out;
}

}  // namespace dcca
