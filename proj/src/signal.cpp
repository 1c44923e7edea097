#include "dcca/signal.hpp"

#include "dcca/error.hpp"
#include "dcca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dcca {

namespace {

// Single centred pass of a symmetric filter: linear phase with zero delay.
Matrix convolve_columns(const Matrix& X, const std::vector<double>& taps) {
  Matrix out(X.rows(), X.cols());
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < X.cols(); ++c) {
    kernels::convolve_same(std::span<const double>(X.col(c).data(), static_cast<std::size_t>(X.rows())), taps,
                           std::span<double>(out.col(c).data(), static_cast<std::size_t>(X.rows())));
  }
  return out;
}

Index odd_taps(double n) {
  auto t = static_cast<Index>(std::ceil(n));
  return t % 2 == 0 ? t + 1 : t;
}

Matrix interpolate(const Matrix& X, double fs_in, double fs_out) {
  const Index n = resampled_length(X.rows(), fs_in, fs_out);
  Matrix out(n, X.cols());
  const double step = fs_in / fs_out;
  for (Index k = 0; k < n; ++k) {
    const double pos = static_cast<double>(k) * step;
    auto i = static_cast<Index>(std::floor(pos));
    if (i >= X.rows() - 1) i = X.rows() - 1;
    const double frac = pos - static_cast<double>(i);
    if (i + 1 < X.rows() && frac > 0.0) {
      out.row(k) = (1.0 - frac) * X.row(i) + frac * X.row(i + 1);
    } else {
      out.row(k) = X.row(i);
    }
  }
  return out;
}

}  // namespace

void TimeSeries::validate() const {
  require(fs_hz > 0.0 && std::isfinite(fs_hz), ErrorKind::config, "sampling rate must be positive");
  require_finite(data, "time series");
  require(labels.empty() || static_cast<Index>(labels.size()) == data.cols(), ErrorKind::shape,
          "label count does not match the channel count");
}

std::vector<double> lowpass_taps(double cutoff_hz, double fs_hz, Index taps) {
  require(taps >= 1 && taps % 2 == 1, ErrorKind::config, "FIR length must be odd");
  require(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2, ErrorKind::config,
          "low-pass cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, fs/2)");
  const double fc = cutoff_hz / fs_hz;
  const Index half = taps / 2;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (Index i = 0; i < taps; ++i) {
    const double n = static_cast<double>(i - half);
    const double sinc = n == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * n) / (std::numbers::pi * n);
    const double w = taps == 1 ? 1.0
                               : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                         static_cast<double>(taps - 1));
    h[static_cast<std::size_t>(i)] = sinc * w;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (auto& v : h) v /= sum;
  // exact symmetry
  for (Index i = 0; i < half; ++i) h[static_cast<std::size_t>(taps - 1 - i)] = h[static_cast<std::size_t>(i)];
  return h;
}

std::vector<double> bandpass_taps(double low_hz, double high_hz, double fs_hz, Index taps) {
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2, ErrorKind::config,
          "invalid band " + std::to_string(low_hz) + "-" + std::to_string(high_hz) + " Hz at fs " +
              std::to_string(fs_hz));
  auto hi = lowpass_taps(high_hz, fs_hz, taps);
  const auto lo = lowpass_taps(low_hz, fs_hz, taps);
  for (std::size_t i = 0; i < hi.size(); ++i) hi[i] -= lo[i];
  return hi;
}

Index resampled_length(Index m, double fs_in, double fs_out) {
  if (m <= 0) return 0;
  return static_cast<Index>(std::floor(static_cast<double>(m - 1) * fs_out / fs_in + 1e-9)) + 1;
}

Matrix resample(const Matrix& X, double fs_in, double fs_out) {
  require(fs_in > 0.0 && fs_out > 0.0, ErrorKind::config, "sampling rates must be positive");
  require(X.rows() >= 1, ErrorKind::input, "cannot resample an empty signal");
  if (fs_in == fs_out) return X;
  if (fs_out > fs_in) return interpolate(X, fs_in, fs_out);

  Matrix cur = X;
  double fs = fs_in;
  while (fs / fs_out >= 4.0) {
    // half-band stage: pass up to 0.4 of the halved rate
    const auto h = lowpass_taps(0.2 * fs, fs, 31);
    const Matrix f = convolve_columns(cur, h);
    Matrix dec((f.rows() + 1) / 2, f.cols());
    for (Index i = 0; i < dec.rows(); ++i) dec.row(i) = f.row(2 * i);
    cur = std::move(dec);
    fs /= 2.0;
  }
  const double ratio = fs / fs_out;
  if (ratio > 1.0 + 1e-12) {
    const auto h = lowpass_taps(0.45 * fs_out, fs, odd_taps(8.0 * ratio));
    cur = convolve_columns(cur, h);
  }
  // the decimated grid keeps sample 0 at t = 0
  return interpolate(cur, fs, fs_out);
}

TimeSeries envelope(std::span<const double> audio, double fs_in, double fs_out, double smooth_ms,
                    bool compress) {
  require(!audio.empty(), ErrorKind::input, "envelope of an empty signal");
  require(fs_out > 0.0 && fs_in >= 2.0 * fs_out, ErrorKind::config, "envelope needs fs_in >= 2 fs_out");
  require(smooth_ms >= 0.0, ErrorKind::config, "smoothing window must be >= 0 ms");
  const auto m = static_cast<Index>(audio.size());
  Matrix sq(m, 1);
  for (Index i = 0; i < m; ++i) sq(i, 0) = audio[static_cast<std::size_t>(i)] * audio[static_cast<std::size_t>(i)];
  const Index win = std::max<Index>(1, static_cast<Index>(std::llround(smooth_ms * fs_in / 1000.0)));
  if (win > 1) sq = convolve_columns(sq, std::vector<double>(static_cast<std::size_t>(win), 1.0 / static_cast<double>(win)));
  Matrix env = resample(sq, fs_in, fs_out);
  env = env.cwiseMax(0.0);
  if (compress) env = env.unaryExpr([](double v) { return std::cbrt(v); });
  TimeSeries out;
  out.data = std::move(env);
  out.fs_hz = fs_out;
  out.labels = {"envelope"};
  return out;
}

Index bandpass_order(double fs_hz) { return 2 * static_cast<Index>(std::llround(fs_hz)); }

TimeSeries bandpass(const TimeSeries& X, double low_hz, double high_hz) {
  X.validate();
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < X.fs_hz / 2, ErrorKind::config,
          "invalid band-pass " + std::to_string(low_hz) + "-" + std::to_string(high_hz) + " Hz");
  const auto taps = bandpass_taps(low_hz, high_hz, X.fs_hz, bandpass_order(X.fs_hz) + 1);
  TimeSeries out = X;
  out.data = kernels::filter_columns(X.data, taps);
  return out;
}

double FilterBank::center_hz(Index band) const {
  const auto& b = bands.at(static_cast<std::size_t>(band));
  return std::sqrt(b.low_hz * b.high_hz);
}

FilterBank design_filterbank(double fs_hz, Index n_bands, double first_center_hz,
                             double last_center_fraction) {
  require(fs_hz > 0.0, ErrorKind::config, "sampling rate must be positive");
  require(n_bands >= 2, ErrorKind::config, "filterbank needs at least 2 bands");
  const double nyq = fs_hz / 2.0;
  const double last = last_center_fraction * nyq;
  require(first_center_hz > 0.0 && first_center_hz < last, ErrorKind::config,
          "filterbank centres out of range");
  Index order = 2 * static_cast<Index>(std::llround(fs_hz / 2.0));
  order = std::max<Index>(order, 2);
  FilterBank fb;
  fb.fs_hz = fs_hz;
  const double ratio = std::pow(last / first_center_hz, 1.0 / static_cast<double>(n_bands - 1));
  for (Index b = 0; b < n_bands; ++b) {
    const double c = first_center_hz * std::pow(ratio, static_cast<double>(b));
    Band band;
    band.low_hz = c / std::numbers::sqrt2;
    band.high_hz = std::min(c * std::numbers::sqrt2, 0.98 * nyq);
    band.taps = bandpass_taps(band.low_hz, band.high_hz, fs_hz, order + 1);
    fb.bands.push_back(std::move(band));
  }
  return fb;
}

TimeSeries apply_filterbank(const TimeSeries& X, const FilterBank& fb) {
  X.validate();
  require(!fb.bands.empty(), ErrorKind::config, "empty filterbank");
  require(std::abs(fb.fs_hz - X.fs_hz) < 1e-9 * X.fs_hz, ErrorKind::config,
          "filterbank designed for a different sampling rate");
  for (const auto& b : fb.bands) {
    require(b.high_hz < X.fs_hz / 2, ErrorKind::config, "filter band above Nyquist");
  }
  std::vector<std::vector<double>> bank;
  for (const auto& b : fb.bands) bank.push_back(b.taps);
  TimeSeries out;
  out.fs_hz = X.fs_hz;
  out.data = kernels::filterbank(X.data, bank);
  if (!X.labels.empty()) {
    for (const auto& l : X.labels)
      for (Index b = 0; b < fb.size(); ++b) out.labels.push_back(l + "_b" + std::to_string(b));
  }
  return out;
}

PcaTransform fit_pca(const Matrix& X, Index k) {
  require(k >= 1 && k <= X.cols(), ErrorKind::config,
          "PCA dimension " + std::to_string(k) + " outside [1, " + std::to_string(X.cols()) + "]");
  require_finite(X, "PCA input");
  PcaTransform t;
  t.mean = column_means(X);
  const SymEigResult e = sym_eig(auto_covariance(X.rowwise() - t.mean.transpose(), true));
  t.components = e.eigenvectors.leftCols(k);
  t.explained_variance = e.eigenvalues.head(k).cwiseMax(0.0);
  return t;
}

Matrix apply_pca(const PcaTransform& t, const Matrix& X) {
  require(X.cols() == t.components.rows(), ErrorKind::shape,
          "PCA expects " + std::to_string(t.components.rows()) + " columns, got " + std::to_string(X.cols()));
  return (X.rowwise() - t.mean.transpose()) * t.components;
}

Matrix reconstruct_pca(const PcaTransform& t, const Matrix& scores) {
  require(scores.cols() == t.components.cols(), ErrorKind::shape, "score count does not match the PCA");
  return (scores * t.components.transpose()).rowwise() + t.mean.transpose();
}

TimeSeries time_lag(const TimeSeries& X, Index lags) {
  require(lags >= 1, ErrorKind::config, "lags must be >= 1");
  require(lags < X.samples(), ErrorKind::config, "lags must be smaller than the sample count");
  TimeSeries out;
  out.fs_hz = X.fs_hz;
  out.data = kernels::lag_embed(X.data, lags);
  if (!X.labels.empty()) {
    for (const auto& l : X.labels)
      for (Index j = 0; j < lags; ++j) out.labels.push_back(l + "_lag" + std::to_string(j));
  }
  return out;
}

}  // namespace dcca
