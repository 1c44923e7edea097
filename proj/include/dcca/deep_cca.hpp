#pragma once

#include "dcca/linear_cca.hpp"
#include "dcca/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dcca {

inline Ridge default_objective_ridge() { return Ridge::relative(1e-4); }

struct CorrObjective {
  double rho = 0.0;        // trace norm of T_H
  Vector singular_values;  // of T_H
  Matrix grad_x;           // d rho / d Hx
  Matrix grad_y;
};

// Total correlation of two batches of network outputs and its gradient with
// respect to both. The ridge is added to both auto-covariances; with a
// relative ridge its dependence on H is included in the gradient.
CorrObjective corr_objective(const Matrix& Hx, const Matrix& Hy,
                             const Ridge& ridge = default_objective_ridge());

// Per-column affine map fitted on training data so network inputs are
// zero-mean and unit-variance.
struct Standardizer {
  Vector mean;
  Vector scale;  // 1 / std, 1 for constant columns

  static Standardizer fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> validation;  // empty: selection and stopping use train
};

struct DccaHyper {
  Index d = 1;
  std::vector<Index> hidden{2038, 1608};
  double eta = 1e-3;
  Index batch = 2048;
  double dropout = 0.0;
  Index epochs = 100;
  Index patience = 10;
  Index seeds = 3;
  double leaky_slope = 0.1;
  bool linear = false;  // linear hidden activations
  Ridge ridge = default_objective_ridge();
  std::uint64_t seed = 0;
};

struct EpochLog {
  Index epoch = 0;
  double train_rho = 0.0;
  double val_rho = 0.0;
  double wall_ms = 0.0;
};

struct DccaModel {
  DenseNetwork net_x;
  DenseNetwork net_y;
  Standardizer in_x;
  Standardizer in_y;
  LinearCcaModel readout;
  DccaHyper hyper;
  Index chosen_seed = 0;
  Index best_epoch = 0;
  double best_val_rho = 0.0;
  std::vector<EpochLog> log;
};

// Contiguous blocks of `batch` positions in [0, n); a short tail is merged
// into the previous block when it is under half a batch.
std::vector<std::pair<Index, Index>> batch_blocks(Index n, Index batch);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

DccaModel train_dcca(const Matrix& X, const Matrix& Y, const Split& split, const DccaHyper& hyper);

// Eval-mode network outputs passed through the readout CCA.
std::pair<Matrix, Matrix> transform_dcca(const DccaModel& model, const Matrix& X, const Matrix& Y);

// Per-dimension Pearson correlations of the transformed views.
Vector evaluate_dcca(const DccaModel& model, const Matrix& X, const Matrix& Y);

// One JSON object per line: epoch, train_rho, val_rho, wall_ms.
std::string training_log_jsonl(const std::vector<EpochLog>& log);

}  // namespace dcca
