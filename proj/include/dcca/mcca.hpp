#pragma once

#include "dcca/linalg.hpp"

#include <span>
#include <vector>

namespace dcca {

// Multiway CCA over N >= 2 views.
//
// proj[n] holds the view-n block of each of the top-d generalized
// eigenvectors of R v = lambda_eig D v. The stacked vectors are
// D-orthonormal (ridge included), which keeps
// isc = (lambda_eig - 1) / (N - 1) on the training data.
struct MccaModel {
  std::vector<Matrix> proj;       // proj[n]: d_n x d
  Vector eigenvalues;             // lambda_eig, length d, non-increasing
  std::vector<Index> view_dims;
  std::vector<Vector> means;
  std::vector<Matrix> back_proj;  // back_proj[n]: d x d_n least-squares reconstruction
  Index clamped = 0;

  Index views() const { return static_cast<Index>(proj.size()); }
  Index dims() const { return eigenvalues.size(); }
  // Inter-set correlation implied by each eigenvalue.
  Vector isc() const;
};

MccaModel fit_mcca(std::span<const Matrix> views, Index d, const Ridge& ridge = Ridge::relative(1e-6));

// Ratio of between-set to within-set covariance of column `dim` across the
// projected views, normalized by N - 1.
double isc(std::span<const Matrix> projections, Index dim);

// Projects view `view` onto the shared dimensions; with back_project the
// d components are mapped back to the view's channel space.
Matrix denoise(const MccaModel& model, Index view, const Matrix& data, bool back_project);

// Projections of every view, in view order.
std::vector<Matrix> project_all(const MccaModel& model, std::span<const Matrix> views);

}  // namespace dcca
