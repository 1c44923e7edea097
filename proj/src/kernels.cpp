#include "dcca/kernels.hpp"

#include "dcca/error.hpp"

#include <algorithm>

namespace dcca::kernels {

namespace {

constexpr Index kTile = 64;

Index tiles(Index n) { return (n + kTile - 1) / kTile; }

void check_bank(const std::vector<std::vector<double>>& bank) {
  require(!bank.empty(), ErrorKind::config, "filterbank has no filters");
  for (const auto& taps : bank) {
    require(!taps.empty(), ErrorKind::config, "filter has no taps");
  }
}

void filter_column_into(const Matrix& X, Index col, std::span<const double> taps, Matrix& out,
                        Index out_col) {
  const Index m = X.rows();
  std::vector<double> x(X.col(col).data(), X.col(col).data() + m);
  const auto y = zero_phase(x, taps);
  std::copy(y.begin(), y.end(), out.col(out_col).data());
}

}  // namespace

Matrix cross_product(const Matrix& A, const Matrix& B) {
  require(A.rows() == B.rows(), ErrorKind::shape, "cross_product row counts differ");
  Matrix out(A.cols(), B.cols());
  const Index ti = tiles(A.cols());
  const Index tj = tiles(B.cols());
  const Index total = ti * tj;
#pragma omp parallel for schedule(dynamic)
  for (Index t = 0; t < total; ++t) {
    const Index i0 = (t / tj) * kTile;
    const Index j0 = (t % tj) * kTile;
    const Index bi = std::min(kTile, A.cols() - i0);
    const Index bj = std::min(kTile, B.cols() - j0);
    out.block(i0, j0, bi, bj).noalias() =
        A.middleCols(i0, bi).transpose() * B.middleCols(j0, bj);
  }
  return out;
}

Matrix cross_product_serial(const Matrix& A, const Matrix& B) {
  require(A.rows() == B.rows(), ErrorKind::shape, "cross_product row counts differ");
  Matrix out = Matrix::Zero(A.cols(), B.cols());
  for (Index i = 0; i < A.cols(); ++i) {
    for (Index j = 0; j < B.cols(); ++j) {
      double s = 0.0;
      for (Index r = 0; r < A.rows(); ++r) s += A(r, i) * B(r, j);
      out(i, j) = s;
    }
  }
  return out;
}

void convolve_same(std::span<const double> x, std::span<const double> taps,
                   std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto len = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t c = (len - 1) / 2;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    // x index = i + c - k must lie in [0, n)
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + c - (n - 1));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(len - 1, i + c);
    double s = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) s += taps[k] * x[i + c - k];
    out[i] = s;
  }
}

std::vector<double> zero_phase(std::span<const double> x, std::span<const double> taps) {
  std::vector<double> forward(x.size());
  convolve_same(x, taps, forward);
  std::reverse(forward.begin(), forward.end());
  std::vector<double> backward(x.size());
  convolve_same(forward, taps, backward);
  std::reverse(backward.begin(), backward.end());
  return backward;
}

Matrix filter_columns(const Matrix& X, std::span<const double> taps) {
  Matrix out(X.rows(), X.cols());
#pragma omp parallel for schedule(dynamic)
  for (Index c = 0; c < X.cols(); ++c) filter_column_into(X, c, taps, out, c);
  return out;
}

Matrix filter_columns_serial(const Matrix& X, std::span<const double> taps) {
  Matrix out(X.rows(), X.cols());
  for (Index c = 0; c < X.cols(); ++c) filter_column_into(X, c, taps, out, c);
  return out;
}

Matrix filterbank(const Matrix& X, const std::vector<std::vector<double>>& bank) {
  check_bank(bank);
  const auto nb = static_cast<Index>(bank.size());
  Matrix out(X.rows(), X.cols() * nb);
  const Index total = X.cols() * nb;
#pragma omp parallel for schedule(dynamic)
  for (Index t = 0; t < total; ++t) {
    filter_column_into(X, t / nb, bank[static_cast<std::size_t>(t % nb)], out, t);
  }
  return out;
}

Matrix filterbank_serial(const Matrix& X, const std::vector<std::vector<double>>& bank) {
  check_bank(bank);
  const auto nb = static_cast<Index>(bank.size());
  Matrix out(X.rows(), X.cols() * nb);
  for (Index c = 0; c < X.cols(); ++c) {
    for (Index b = 0; b < nb; ++b) {
      filter_column_into(X, c, bank[static_cast<std::size_t>(b)], out, c * nb + b);
    }
  }
  return out;
}

Matrix lag_embed(const Matrix& X, Index lags) {
  require(lags >= 1, ErrorKind::config, "lags must be >= 1");
  const Index m = X.rows();
  Matrix out = Matrix::Zero(m, X.cols() * lags);
  const Index total = X.cols() * lags;
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < total; ++t) {
    const Index c = t / lags;
    const Index lag = t % lags;
    if (lag < m) out.col(t).tail(m - lag) = X.col(c).head(m - lag);
  }
  return out;
}

Matrix lag_embed_serial(const Matrix& X, Index lags) {
  require(lags >= 1, ErrorKind::config, "lags must be >= 1");
  Matrix out = Matrix::Zero(X.rows(), X.cols() * lags);
  for (Index c = 0; c < X.cols(); ++c) {
    for (Index lag = 0; lag < lags; ++lag) {
      for (Index i = lag; i < X.rows(); ++i) out(i, c * lags + lag) = X(i - lag, c);
    }
  }
  return out;
}

}  // namespace dcca::kernels
