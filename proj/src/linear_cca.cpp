#include "dcca/linear_cca.hpp"

#include "dcca/error.hpp"

#include <algorithm>
#include <string>

namespace dcca {

LinearCcaModel fit_cca(const Matrix& X, const Matrix& Y, Index d, const Ridge& ridge) {
  require(X.rows() == Y.rows(), ErrorKind::shape, "views have different sample counts");
  require(X.cols() >= 1 && Y.cols() >= 1, ErrorKind::shape, "views need at least one column");
  require(d >= 1 && d <= std::min(X.cols(), Y.cols()), ErrorKind::config,
          "d = " + std::to_string(d) + " outside [1, " +
              std::to_string(std::min(X.cols(), Y.cols())) + "]");
  require(X.rows() > std::max(X.cols(), Y.cols()), ErrorKind::degenerate,
          "need more samples than dimensions (m = " + std::to_string(X.rows()) + ")");
  require_finite(X, "stimulus view");
  require_finite(Y, "response view");

  LinearCcaModel model;
  model.mean_x = column_means(X);
  model.mean_y = column_means(Y);
  const Matrix Xc = X.rowwise() - model.mean_x.transpose();
  const Matrix Yc = Y.rowwise() - model.mean_y.transpose();

  const Matrix Cxx = auto_covariance(Xc, true);
  const Matrix Cyy = auto_covariance(Yc, true);
  const Matrix Cxy = covariance(Xc, Yc, true);

  model.ridge_x = ridge.resolve(Cxx);
  model.ridge_y = ridge.resolve(Cyy);
  const auto Wx = inv_sqrt_sym(Cxx, model.ridge_x);
  const auto Wy = inv_sqrt_sym(Cyy, model.ridge_y);
  model.clamped = Wx.clamped + Wy.clamped;

  const Matrix T = Wx.value * Cxy * Wy.value;
  const SvdResult s = svd(T);
  model.proj_x = Wx.value * s.U.leftCols(d);
  model.proj_y = Wy.value * s.V.leftCols(d);
  model.canon_corr = s.singular_values.head(d);
  return model;
}

Matrix project(const LinearCcaModel& model, const Matrix& data, View view) {
  const Matrix& proj = view == View::stimulus ? model.proj_x : model.proj_y;
  const Vector& mean = view == View::stimulus ? model.mean_x : model.mean_y;
  require(data.cols() == proj.rows(), ErrorKind::shape,
          "projection expects " + std::to_string(proj.rows()) + " columns, got " +
              std::to_string(data.cols()));
  return (data.rowwise() - mean.transpose()) * proj;
}

}  // namespace dcca
