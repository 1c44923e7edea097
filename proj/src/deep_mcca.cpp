#include "dcca/deep_mcca.hpp"

#include "dcca/error.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace dcca {

namespace {

Matrix rows_of(const Matrix& A, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = A.row(idx[i]);
  return out;
}

Matrix concat_codes(const std::vector<Matrix>& codes) {
  Index cols = 0;
  for (const auto& c : codes) cols += c.cols();
  Matrix y(codes.front().rows(), cols);
  Index off = 0;
  for (const auto& c : codes) {
    y.middleCols(off, c.cols()) = c;
    off += c.cols();
  }
  return y;
}

double val_rho(const DmccaNets& nets, const std::vector<Matrix>& views, const Ridge& ridge) {
  std::vector<Matrix> codes;
  for (std::size_t n = 0; n < views.size(); ++n) codes.push_back(predict(nets.encoders[n], views[n]));
  const double r = total_pairwise_corr(codes, ridge).rho_total;
  return std::isfinite(r) ? r : -std::numeric_limits<double>::infinity();
}

}  // namespace

PairwiseCorr total_pairwise_corr(std::span<const Matrix> codes, const Ridge& ridge) {
  const std::size_t N = codes.size();
  require(N >= 2, ErrorKind::config, "pairwise correlation needs at least 2 codes");
  for (const auto& c : codes) {
    require(c.rows() == codes[0].rows() && c.cols() == codes[0].cols(), ErrorKind::shape,
            "codes differ in shape");
  }
  PairwiseCorr out;
  out.grads.assign(N, Matrix::Zero(codes[0].rows(), codes[0].cols()));
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = j + 1; k < N; ++k) {
      const CorrObjective o = corr_objective(codes[j], codes[k], ridge);
      out.rho_total += 2.0 * o.rho;
      out.grads[j] += 2.0 * o.grad_x;
      out.grads[k] += 2.0 * o.grad_y;
    }
  }
  return out;
}

DmccaNets make_dmcca_nets(std::span<const Index> view_dims, const DmccaHyper& hyper,
                          std::uint64_t seed) {
  const auto N = static_cast<Index>(view_dims.size());
  require(N >= 2, ErrorKind::config, "deep multiway CCA needs at least 2 views");
  require(hyper.d >= 1, ErrorKind::config, "d must be >= 1");
  const Activation hidden =
      hyper.linear ? Activation::linear() : Activation::leaky_relu(hyper.leaky_slope);
  DmccaNets nets;
  for (Index n = 0; n < N; ++n) {
    NetworkShape enc;
    enc.input = view_dims[static_cast<std::size_t>(n)];
    enc.hidden = hyper.enc_hidden;
    enc.output = hyper.d;
    enc.hidden_activation = hidden;
    enc.output_activation = Activation::linear();
    enc.dropout = hyper.dropout;
    nets.encoders.push_back(make_network(enc, derive_seed(seed, static_cast<std::uint64_t>(n), 10)));

    NetworkShape dec;
    dec.input = N * hyper.d;
    dec.hidden = hyper.dec_hidden;
    dec.output = view_dims[static_cast<std::size_t>(n)];
    dec.hidden_activation = hidden;
    dec.output_activation = Activation::linear();
    dec.dropout = hyper.dropout;
    nets.decoders.push_back(make_network(dec, derive_seed(seed, static_cast<std::uint64_t>(n), 20)));
  }
  return nets;
}

DmccaCost dmcca_cost(const DmccaNets& nets, std::span<const Matrix> views, double mse_weight,
                     const Ridge& ridge, Mode mode, Rng* rng,
                     const std::vector<std::vector<Matrix>>* masks) {
  const std::size_t N = views.size();
  require(N >= 2 && nets.encoders.size() == N && nets.decoders.size() == N, ErrorKind::shape,
          "view count does not match the networks");
  require(std::isfinite(mse_weight) && mse_weight >= 0.0, ErrorKind::config,
          "mse_weight must be >= 0");
  if (masks) {
    require(masks->size() == 2 * N, ErrorKind::shape, "one mask set per network expected");
  }
  const Index m = views[0].rows();
  for (const auto& v : views) require(v.rows() == m, ErrorKind::shape, "views are not aligned");

  auto run = [&](const DenseNetwork& net, const Matrix& X, std::size_t slot) {
    if (masks) return forward_with_masks(net, X, (*masks)[slot]);
    return forward(net, X, mode, rng);
  };

  std::vector<Forward> enc_fw;
  std::vector<Matrix> codes;
  for (std::size_t n = 0; n < N; ++n) {
    enc_fw.push_back(run(nets.encoders[n], views[n], n));
    codes.push_back(enc_fw.back().output);
  }
  const Matrix y = concat_codes(codes);

  DmccaCost cost;
  PairwiseCorr pc = total_pairwise_corr(codes, ridge);
  cost.rho_total = pc.rho_total;
  cost.E = pc.rho_total;

  const Index d = codes[0].cols();
  std::vector<Matrix>& code_grads = pc.grads;
  for (std::size_t n = 0; n < N; ++n) {
    const Forward fw = run(nets.decoders[n], y, N + n);
    const Matrix diff = fw.output - views[n];
    const double denom = static_cast<double>(diff.size());
    const double mse = diff.squaredNorm() / denom;
    cost.mse.push_back(mse);
    cost.E -= mse_weight * mse;
    const Matrix upstream = (-2.0 * mse_weight / denom) * diff;
    Gradients g = backward(nets.decoders[n], fw.tape, upstream);
    for (std::size_t k = 0; k < N; ++k) {
      code_grads[k] += g.input.middleCols(static_cast<Index>(k) * d, d);
    }
    cost.dec_grads.push_back(std::move(g));
  }
  for (std::size_t n = 0; n < N; ++n) {
    cost.enc_grads.push_back(backward(nets.encoders[n], enc_fw[n].tape, code_grads[n]));
  }
  return cost;
}

DmccaModel train_dmcca(std::span<const Matrix> views, const Split& split, const DmccaHyper& hyper) {
  const std::size_t N = views.size();
  require(N >= 2, ErrorKind::config, "deep multiway CCA needs at least 2 views");
  require(hyper.batch > hyper.d, ErrorKind::config, "batch size must exceed d");
  require(hyper.seeds >= 1, ErrorKind::config, "need at least one seed");
  require(hyper.epochs >= 0 && hyper.patience >= 1, ErrorKind::config,
          "epochs must be >= 0 and patience >= 1");
  require(std::isfinite(hyper.eta) && hyper.eta >= 0.0, ErrorKind::config, "learning rate must be >= 0");
  require(static_cast<Index>(split.train.size()) > hyper.d, ErrorKind::degenerate,
          "training split smaller than d + 1 rows");
  const Index m = views[0].rows();
  std::vector<Index> dims;
  for (const auto& v : views) {
    require(v.rows() == m, ErrorKind::shape, "views have unequal sample counts");
    require_finite(v, "view");
    dims.push_back(v.cols());
  }
  for (const auto* part : {&split.train, &split.validation}) {
    for (Index i : *part) require(i >= 0 && i < m, ErrorKind::config, "split index out of range");
  }

  DmccaModel model;
  model.hyper = hyper;
  const bool has_val = static_cast<Index>(split.validation.size()) > hyper.d;
  std::vector<Matrix> train, val;
  for (const auto& v : views) {
    const Matrix tr = rows_of(v, split.train);
    model.inputs.push_back(Standardizer::fit(tr));
    train.push_back(model.inputs.back().apply(tr));
    val.push_back(has_val ? model.inputs.back().apply(rows_of(v, split.validation)) : train.back());
  }

  const Index n_seeds = hyper.seeds;
  std::vector<double> init_rho(static_cast<std::size_t>(n_seeds));
#pragma omp parallel for schedule(static, 1)
  for (Index s = 0; s < n_seeds; ++s) {
    const auto nets = make_dmcca_nets(dims, hyper, derive_seed(hyper.seed, static_cast<std::uint64_t>(s)));
    init_rho[static_cast<std::size_t>(s)] = val_rho(nets, val, hyper.ridge);
  }
  Index chosen = 0;
  for (Index s = 1; s < n_seeds; ++s) {
    if (init_rho[static_cast<std::size_t>(s)] > init_rho[static_cast<std::size_t>(chosen)]) chosen = s;
  }
  model.chosen_seed = chosen;
  DmccaNets nets = make_dmcca_nets(dims, hyper, derive_seed(hyper.seed, static_cast<std::uint64_t>(chosen)));
  DmccaNets best = nets;
  double best_val = init_rho[static_cast<std::size_t>(chosen)];
  Index best_epoch = 0;
  Rng rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(chosen), 2));
  auto blocks = batch_blocks(static_cast<Index>(split.train.size()), hyper.batch);
  const auto t0 = std::chrono::steady_clock::now();

  for (Index epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(blocks.begin(), blocks.end(), rng);
    double rho_sum = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [start, len] = blocks[b];
      std::vector<Matrix> batch;
      for (const auto& t : train) batch.push_back(t.middleRows(start, len));
      const DmccaCost cost = dmcca_cost(nets, batch, hyper.mse_weight, hyper.ridge, Mode::train, &rng);
      bool finite = std::isfinite(cost.E);
      for (const auto& g : cost.enc_grads) finite = finite && g.all_finite();
      for (const auto& g : cost.dec_grads) finite = finite && g.all_finite();
      if (!finite) {
        fail(ErrorKind::numeric, "deep multiway CCA diverged at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(b) + ": E = " + std::to_string(cost.E) +
                                     ", rho_total = " + std::to_string(cost.rho_total));
      }
      rho_sum += cost.rho_total;
      for (std::size_t n = 0; n < N; ++n) {
        nets.encoders[n] = ascend(std::move(nets.encoders[n]), cost.enc_grads[n], hyper.eta);
        nets.decoders[n] = ascend(std::move(nets.decoders[n]), cost.dec_grads[n], hyper.eta);
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_rho = rho_sum / static_cast<double>(blocks.size());
    entry.val_rho = val_rho(nets, val, hyper.ridge);
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    model.log.push_back(entry);
    if (entry.val_rho > best_val) {
      best_val = entry.val_rho;
      best_epoch = epoch;
      best = nets;
    } else if (epoch - best_epoch >= hyper.patience) {
      break;
    }
  }
  model.nets = std::move(best);
  model.best_epoch = best_epoch;
  model.best_val_rho = best_val;
  return model;
}

Matrix encode(const DmccaModel& model, Index view, const Matrix& X) {
  require(view >= 0 && view < model.views(), ErrorKind::config, "view index out of range");
  const auto v = static_cast<std::size_t>(view);
  return predict(model.nets.encoders[v], model.inputs[v].apply(X));
}

std::vector<Matrix> reconstruct(const DmccaModel& model, std::span<const Matrix> views) {
  require(static_cast<Index>(views.size()) == model.views(), ErrorKind::shape,
          "view count does not match the model");
  std::vector<Matrix> codes;
  for (Index n = 0; n < model.views(); ++n) codes.push_back(encode(model, n, views[static_cast<std::size_t>(n)]));
  const Matrix y = concat_codes(codes);
  std::vector<Matrix> out;
  for (std::size_t n = 0; n < views.size(); ++n) {
    const Matrix z = predict(model.nets.decoders[n], y);
    // undo the input standardization
    out.push_back((z * model.inputs[n].scale.cwiseInverse().asDiagonal()).rowwise() +
                  model.inputs[n].mean.transpose());
  }
  return out;
}

}  // namespace dcca
