#pragma once

#include "dcca/deep_cca.hpp"

#include <span>
#include <vector>

namespace dcca {

struct PairwiseCorr {
  double rho_total = 0.0;  // over ordered pairs, so each unordered pair twice
  std::vector<Matrix> grads;
};

PairwiseCorr total_pairwise_corr(std::span<const Matrix> codes,
                                 const Ridge& ridge = default_objective_ridge());

struct DmccaHyper {
  Index d = 10;
  std::vector<Index> enc_hidden{60, 60};
  std::vector<Index> dec_hidden{60, 110};
  double eta = 1e-3;
  Index batch = 2048;
  double dropout = 0.0;
  Index epochs = 100;
  Index patience = 10;
  Index seeds = 3;
  double mse_weight = 0.1;
  double leaky_slope = 0.1;
  bool linear = false;
  Ridge ridge = default_objective_ridge();
  std::uint64_t seed = 0;
};

struct DmccaNets {
  std::vector<DenseNetwork> encoders;  // d_n -> ... -> d
  std::vector<DenseNetwork> decoders;  // N*d -> ... -> d_n
};

DmccaNets make_dmcca_nets(std::span<const Index> view_dims, const DmccaHyper& hyper,
                          std::uint64_t seed);

struct DmccaCost {
  double E = 0.0;
  double rho_total = 0.0;
  std::vector<double> mse;  // per view, averaged over samples and channels
  std::vector<Gradients> enc_grads;
  std::vector<Gradients> dec_grads;
};

// E = rho_total - mse_weight * sum_n MSE_n and its gradient for every
// encoder and decoder parameter. `masks`, when given, fixes the dropout
// masks (encoders first, then decoders); otherwise train mode draws them
// from `rng` and eval mode uses none.
DmccaCost dmcca_cost(const DmccaNets& nets, std::span<const Matrix> views, double mse_weight,
                     const Ridge& ridge, Mode mode, Rng* rng = nullptr,
                     const std::vector<std::vector<Matrix>>* masks = nullptr);

struct DmccaModel {
  DmccaNets nets;
  std::vector<Standardizer> inputs;
  DmccaHyper hyper;
  Index chosen_seed = 0;
  Index best_epoch = 0;
  double best_val_rho = 0.0;
  std::vector<EpochLog> log;

  Index views() const { return static_cast<Index>(nets.encoders.size()); }
};

DmccaModel train_dmcca(std::span<const Matrix> views, const Split& split, const DmccaHyper& hyper);

// Eval-mode code of one view.
Matrix encode(const DmccaModel& model, Index view, const Matrix& X);
// Eval-mode reconstruction of every view from the concatenated codes, in
// the original units.
std::vector<Matrix> reconstruct(const DmccaModel& model, std::span<const Matrix> views);

}  // namespace dcca
