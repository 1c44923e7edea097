#include "dcca/deep_cca.hpp"

#include "dcca/error.hpp"
#include "dcca/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace dcca {

namespace {

CorrObjective corr_objective_ordered(const Matrix& Hx, const Matrix& Hy, const Ridge& ridge) {
  const Index m = Hx.rows();
  const Index d = Hx.cols();
  const Matrix Hbx = center_columns(Hx);
  const Matrix Hby = center_columns(Hy);
  const Matrix Sxx = auto_covariance(Hbx, true);
  const Matrix Syy = auto_covariance(Hby, true);
  const Matrix Sxy = covariance(Hbx, Hby, true);
  const double rx = ridge.resolve(Sxx);
  const double ry = ridge.resolve(Syy);
  const Matrix Wx = inv_sqrt_sym(Sxx, rx).value;
  const Matrix Wy = inv_sqrt_sym(Syy, ry).value;

  const SvdResult s = svd(Wx * Sxy * Wy);
  CorrObjective out;
  out.singular_values = s.singular_values;
  out.rho = s.singular_values.sum();

  const Matrix Dxy = Wx * s.U * s.V.transpose() * Wy;
  Matrix Dxx = -0.5 * Wx * s.U * s.singular_values.asDiagonal() * s.U.transpose() * Wx;
  Matrix Dyy = -0.5 * Wy * s.V * s.singular_values.asDiagonal() * s.V.transpose() * Wy;
  if (ridge.is_relative()) {
    // r = c tr(S) / d, so dr = (c / d) tr(dS).
    const double c = ridge.value() / static_cast<double>(d);
    Dxx.diagonal().array() += c * Dxx.trace();
    Dyy.diagonal().array() += c * Dyy.trace();
  }
  const double scale = 1.0 / static_cast<double>(m - 1);
  out.grad_x = scale * (2.0 * Hbx * Dxx + Hby * Dxy.transpose());
  out.grad_y = scale * (2.0 * Hby * Dyy + Hbx * Dxy);
  return out;
}

Matrix rows_of(const Matrix& A, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = A.row(idx[i]);
  return out;
}

double safe_rho(const Matrix& Hx, const Matrix& Hy, const Ridge& ridge) {
  const double r = corr_objective(Hx, Hy, ridge).rho;
  return std::isfinite(r) ? r : -std::numeric_limits<double>::infinity();
}

}  // namespace

CorrObjective corr_objective(const Matrix& Hx, const Matrix& Hy, const Ridge& ridge) {
  require(Hx.rows() == Hy.rows() && Hx.cols() == Hy.cols(), ErrorKind::shape,
          "correlation objective needs equally shaped outputs");
  require(Hx.rows() > Hx.cols(), ErrorKind::degenerate,
          "batch of " + std::to_string(Hx.rows()) + " rows is too small for d = " +
              std::to_string(Hx.cols()));
  // A fixed argument order makes swapping the inputs swap the gradients exactly.
  const bool swap = std::lexicographical_compare(Hy.data(), Hy.data() + Hy.size(), Hx.data(),
                                                 Hx.data() + Hx.size());
  if (!swap) return corr_objective_ordered(Hx, Hy, ridge);
  CorrObjective out = corr_objective_ordered(Hy, Hx, ridge);
  std::swap(out.grad_x, out.grad_y);
  return out;
}

Standardizer Standardizer::fit(const Matrix& X) {
  require(X.rows() >= 2, ErrorKind::degenerate, "standardizer needs at least 2 rows");
  Standardizer s;
  s.mean = column_means(X);
  s.scale.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / static_cast<double>(X.rows() - 1);
    s.scale[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  require(X.cols() == mean.size(), ErrorKind::shape,
          "standardizer expects " + std::to_string(mean.size()) + " columns, got " +
              std::to_string(X.cols()));
  return (X.rowwise() - mean.transpose()) * scale.asDiagonal();
}

std::vector<std::pair<Index, Index>> batch_blocks(Index n, Index batch) {
  require(batch >= 1, ErrorKind::config, "batch size must be >= 1");
  std::vector<std::pair<Index, Index>> blocks;
  for (Index start = 0; start < n; start += batch) {
    const Index len = std::min(batch, n - start);
    if (!blocks.empty() && 2 * len < batch) {
      blocks.back().second += len;
    } else {
      blocks.emplace_back(start, len);
    }
  }
  return blocks;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

DccaModel train_dcca(const Matrix& X, const Matrix& Y, const Split& split, const DccaHyper& hyper) {
  require(X.rows() == Y.rows(), ErrorKind::shape, "views have different sample counts");
  require(hyper.d >= 1, ErrorKind::config, "d must be >= 1");
  require(hyper.batch > hyper.d, ErrorKind::config, "batch size must exceed d");
  require(hyper.seeds >= 1, ErrorKind::config, "need at least one seed");
  require(hyper.epochs >= 0 && hyper.patience >= 1, ErrorKind::config,
          "epochs must be >= 0 and patience >= 1");
  require(std::isfinite(hyper.eta) && hyper.eta >= 0.0, ErrorKind::config, "learning rate must be >= 0");
  require(static_cast<Index>(split.train.size()) > hyper.d, ErrorKind::degenerate,
          "training split smaller than d + 1 rows");
  for (const auto* part : {&split.train, &split.validation}) {
    for (Index i : *part) {
      require(i >= 0 && i < X.rows(), ErrorKind::config, "split index out of range");
    }
  }
  require_finite(X, "stimulus view");
  require_finite(Y, "response view");

  DccaModel model;
  model.hyper = hyper;
  const Matrix Xr = rows_of(X, split.train);
  const Matrix Yr = rows_of(Y, split.train);
  model.in_x = Standardizer::fit(Xr);
  model.in_y = Standardizer::fit(Yr);
  const Matrix Xs = model.in_x.apply(Xr);
  const Matrix Ys = model.in_y.apply(Yr);
  const bool has_val = static_cast<Index>(split.validation.size()) > hyper.d;
  const Matrix Xv = has_val ? model.in_x.apply(rows_of(X, split.validation)) : Xs;
  const Matrix Yv = has_val ? model.in_y.apply(rows_of(Y, split.validation)) : Ys;

  auto shape_for = [&](Index input) {
    NetworkShape s;
    s.input = input;
    s.hidden = hyper.hidden;
    s.output = hyper.d;
    s.hidden_activation = hyper.linear ? Activation::linear() : Activation::leaky_relu(hyper.leaky_slope);
    s.output_activation = Activation::linear();
    s.dropout = hyper.dropout;
    return s;
  };
  const NetworkShape sx = shape_for(X.cols());
  const NetworkShape sy = shape_for(Y.cols());

  // Seed selection on validation correlation before any training.
  const Index n_seeds = hyper.seeds;
  std::vector<double> init_rho(static_cast<std::size_t>(n_seeds));
#pragma omp parallel for schedule(static, 1)
  for (Index s = 0; s < n_seeds; ++s) {
    const auto nx = make_network(sx, derive_seed(hyper.seed, static_cast<std::uint64_t>(s), 0));
    const auto ny = make_network(sy, derive_seed(hyper.seed, static_cast<std::uint64_t>(s), 1));
    init_rho[static_cast<std::size_t>(s)] = safe_rho(predict(nx, Xv), predict(ny, Yv), hyper.ridge);
  }
  Index chosen = 0;
  for (Index s = 1; s < n_seeds; ++s) {
    if (init_rho[static_cast<std::size_t>(s)] > init_rho[static_cast<std::size_t>(chosen)]) chosen = s;
  }
  model.chosen_seed = chosen;
  DenseNetwork net_x = make_network(sx, derive_seed(hyper.seed, static_cast<std::uint64_t>(chosen), 0));
  DenseNetwork net_y = make_network(sy, derive_seed(hyper.seed, static_cast<std::uint64_t>(chosen), 1));

  DenseNetwork best_x = net_x, best_y = net_y;
  double best_val = init_rho[static_cast<std::size_t>(chosen)];
  Index best_epoch = 0;
  Rng rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(chosen), 2));
  auto blocks = batch_blocks(Xs.rows(), hyper.batch);
  const auto t0 = std::chrono::steady_clock::now();

  for (Index epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(blocks.begin(), blocks.end(), rng);
    double rho_sum = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [start, len] = blocks[b];
      const auto fx = forward(net_x, Xs.middleRows(start, len), Mode::train, &rng);
      const auto fy = forward(net_y, Ys.middleRows(start, len), Mode::train, &rng);
      const CorrObjective obj = corr_objective(fx.output, fy.output, hyper.ridge);
      if (!std::isfinite(obj.rho) || !obj.grad_x.allFinite() || !obj.grad_y.allFinite()) {
        fail(ErrorKind::numeric,
             "deep CCA diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                 ": rho = " + std::to_string(obj.rho) +
                 ", max |Hx| = " + std::to_string(fx.output.cwiseAbs().maxCoeff()) +
                 ", max |Hy| = " + std::to_string(fy.output.cwiseAbs().maxCoeff()));
      }
      rho_sum += obj.rho;
      const Gradients gx = backward(net_x, fx.tape, obj.grad_x);
      const Gradients gy = backward(net_y, fy.tape, obj.grad_y);
      net_x = ascend(std::move(net_x), gx, hyper.eta);
      net_y = ascend(std::move(net_y), gy, hyper.eta);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_rho = rho_sum / static_cast<double>(blocks.size());
    entry.val_rho = safe_rho(predict(net_x, Xv), predict(net_y, Yv), hyper.ridge);
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    model.log.push_back(entry);
    if (entry.val_rho > best_val) {
      best_val = entry.val_rho;
      best_epoch = epoch;
      best_x = net_x;
      best_y = net_y;
    } else if (epoch - best_epoch >= hyper.patience) {
      break;
    }
  }

  model.net_x = std::move(best_x);
  model.net_y = std::move(best_y);
  model.best_epoch = best_epoch;
  model.best_val_rho = best_val;
  model.readout = fit_cca(predict(model.net_x, Xs), predict(model.net_y, Ys), hyper.d,
                          Ridge::relative(1e-9));
  return model;
}

std::pair<Matrix, Matrix> transform_dcca(const DccaModel& model, const Matrix& X, const Matrix& Y) {
  require(X.rows() == Y.rows(), ErrorKind::shape, "views have different sample counts");
  const Matrix Hx = predict(model.net_x, model.in_x.apply(X));
  const Matrix Hy = predict(model.net_y, model.in_y.apply(Y));
  return {project(model.readout, Hx, View::stimulus), project(model.readout, Hy, View::response)};
}

Vector evaluate_dcca(const DccaModel& model, const Matrix& X, const Matrix& Y) {
  const auto [U, V] = transform_dcca(model, X, Y);
  Vector r(U.cols());
  for (Index k = 0; k < U.cols(); ++k) r[k] = pearson(Vector(U.col(k)), Vector(V.col(k)));
  return r;
}

std::string training_log_jsonl(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  for (const auto& e : log) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_rho"] = e.train_rho;
    j["val_rho"] = e.val_rho;
    j["wall_ms"] = e.wall_ms;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace dcca
