#pragma once

#include "dcca/linalg.hpp"

namespace dcca {

enum class View { stimulus, response };

// Two-view linear CCA. The stimulus view plays x, the response view y.
struct LinearCcaModel {
  Matrix proj_x;     // D1 x d
  Matrix proj_y;     // D2 x d
  Vector canon_corr; // length d, non-increasing
  Vector mean_x;
  Vector mean_y;
  double ridge_x = 0.0;
  double ridge_y = 0.0;
  Index clamped = 0;  // eigenvalues floored while whitening either view

  Index dims() const { return canon_corr.size(); }
};

inline Ridge default_cca_ridge() { return Ridge::relative(1e-6); }

LinearCcaModel fit_cca(const Matrix& X, const Matrix& Y, Index d,
                       const Ridge& ridge = default_cca_ridge());

// Centres by the stored mean of the selected view and applies its projection.
Matrix project(const LinearCcaModel& model, const Matrix& data, View view);

}  // namespace dcca
