#include "dcca/mcca.hpp"

#include "dcca/error.hpp"

#include <algorithm>
#include <string>

namespace dcca {

Vector MccaModel::isc() const {
  const double n = static_cast<double>(views());
  return (eigenvalues.array() - 1.0) / (n - 1.0);
}

MccaModel fit_mcca(std::span<const Matrix> views, Index d, const Ridge& ridge) {
  const auto N = static_cast<Index>(views.size());
  require(N >= 2, ErrorKind::config, "multiway CCA needs at least 2 views");
  const Index m = views[0].rows();
  Index min_dim = views[0].cols();
  Index max_dim = views[0].cols();
  std::vector<Index> offsets;
  Index total = 0;
  for (const auto& v : views) {
    require(v.rows() == m, ErrorKind::shape, "views have unequal sample counts");
    require(v.cols() >= 1, ErrorKind::shape, "view with no columns");
    require_finite(v, "view");
    min_dim = std::min(min_dim, v.cols());
    max_dim = std::max(max_dim, v.cols());
    offsets.push_back(total);
    total += v.cols();
  }
  require(d >= 1 && d <= min_dim, ErrorKind::config,
          "d = " + std::to_string(d) + " outside [1, " + std::to_string(min_dim) + "]");
  require(m > max_dim, ErrorKind::degenerate, "need more samples than view dimensions");

  MccaModel model;
  std::vector<Matrix> centered;
  centered.reserve(views.size());
  for (const auto& v : views) {
    model.means.push_back(column_means(v));
    model.view_dims.push_back(v.cols());
    centered.push_back(v.rowwise() - model.means.back().transpose());
  }

  // Blocks filled in a fixed (j, k) order.
  Matrix R(total, total);
  Matrix D = Matrix::Zero(total, total);
  for (Index j = 0; j < N; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const Matrix Cjj = auto_covariance(centered[uj], true);
    R.block(offsets[uj], offsets[uj], Cjj.rows(), Cjj.cols()) = Cjj;
    D.block(offsets[uj], offsets[uj], Cjj.rows(), Cjj.cols()) = Cjj;
    for (Index k = j + 1; k < N; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const Matrix Cjk = covariance(centered[uj], centered[uk], true);
      R.block(offsets[uj], offsets[uk], Cjk.rows(), Cjk.cols()) = Cjk;
      R.block(offsets[uk], offsets[uj], Cjk.cols(), Cjk.rows()) = Cjk.transpose();
    }
  }

  const SymEigResult eig = generalized_sym_eig(R, D, ridge, model.view_dims);
  model.eigenvalues = eig.eigenvalues.head(d);
  model.clamped = eig.clamped;
  for (Index n = 0; n < N; ++n) {
    const auto un = static_cast<std::size_t>(n);
    Matrix Vn = eig.eigenvectors.block(offsets[un], 0, model.view_dims[un], d);
    const Matrix Cnn = D.block(offsets[un], offsets[un], model.view_dims[un], model.view_dims[un]);
    const Matrix VtC = Vn.transpose() * Cnn;
    const Matrix G = VtC * Vn;
    model.back_proj.push_back(G.completeOrthogonalDecomposition().solve(VtC));
    model.proj.push_back(std::move(Vn));
  }
  return model;
}

double isc(std::span<const Matrix> projections, Index dim) {
  const auto N = static_cast<Index>(projections.size());
  require(N >= 2, ErrorKind::config, "ISC needs at least 2 projections");
  const Index m = projections[0].rows();
  const Index d = projections[0].cols();
  for (const auto& p : projections) {
    require(p.rows() == m && p.cols() == d, ErrorKind::shape, "projections differ in shape");
  }
  require(dim >= 0 && dim < d, ErrorKind::config, "ISC dimension out of range");
  require(m >= 2, ErrorKind::degenerate, "ISC needs at least 2 samples");

  Matrix cols(m, N);
  for (Index n = 0; n < N; ++n) cols.col(n) = projections[static_cast<std::size_t>(n)].col(dim);
  const Matrix C = auto_covariance(cols);
  const double within = C.trace();
  const double between = C.sum() - within;
  require(within > 0.0, ErrorKind::degenerate, "zero within-set covariance");
  return between / (static_cast<double>(N - 1) * within);
}

Matrix denoise(const MccaModel& model, Index view, const Matrix& data, bool back_project) {
  require(view >= 0 && view < model.views(), ErrorKind::config, "view index out of range");
  const auto v = static_cast<std::size_t>(view);
  require(data.cols() == model.view_dims[v], ErrorKind::shape,
          "view " + std::to_string(view) + " expects " + std::to_string(model.view_dims[v]) +
              " columns, got " + std::to_string(data.cols()));
  const Matrix Z = (data.rowwise() - model.means[v].transpose()) * model.proj[v];
  if (!back_project) return Z;
  return (Z * model.back_proj[v]).rowwise() + model.means[v].transpose();
}

std::vector<Matrix> project_all(const MccaModel& model, std::span<const Matrix> views) {
  require(static_cast<Index>(views.size()) == model.views(), ErrorKind::shape,
          "view count does not match the model");
  std::vector<Matrix> out;
  out.reserve(views.size());
  for (Index n = 0; n < model.views(); ++n) {
    out.push_back(denoise(model, n, views[static_cast<std::size_t>(n)], false));
  }
  return out;
}

}  // namespace dcca
