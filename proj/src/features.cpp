#include "dcca/features.hpp"

#include "dcca/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace dcca {

namespace {

constexpr Index kSubbands = 10;
constexpr double kSubbandLowHz = 50.0;

struct Spectrum {
  std::vector<double> mag;   // bins 1 .. N/2
  std::vector<double> norm;  // unit L1
};

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names{
      "zcr",        "centroid_hz", "high_low_ratio", "spread_hz",  "rolloff_hz",
      "entropy",    "flatness",    "roughness_hz",   "rms",        "flux",
      "flux_band0", "flux_band1",  "flux_band2",     "flux_band3", "flux_band4",
      "flux_band5", "flux_band6",  "flux_band7",     "flux_band8", "flux_band9"};
  return names;
}

Index frame_length(const FrameSpec& spec, double fs_hz) {
  require(spec.frame_ms > 0.0 && fs_hz > 0.0, ErrorKind::config, "frame length must be positive");
  return std::max<Index>(2, static_cast<Index>(std::llround(spec.frame_ms * fs_hz / 1000.0)));
}

Index hop_length(const FrameSpec& spec, double fs_hz) {
  require(spec.hop_fraction > 0.0 && spec.hop_fraction <= 1.0, ErrorKind::config,
          "hop fraction must lie in (0, 1]");
  return std::max<Index>(1, static_cast<Index>(std::llround(spec.hop_fraction *
                                                            static_cast<double>(frame_length(spec, fs_hz)))));
}

TimeSeries extract_features(std::span<const double> audio, double fs_hz, const FrameSpec& spec) {
  const Index L = frame_length(spec, fs_hz);
  const Index hop = hop_length(spec, fs_hz);
  const auto m = static_cast<Index>(audio.size());
  require(m >= L, ErrorKind::input,
          "signal of " + std::to_string(m) + " samples is shorter than one frame (" + std::to_string(L) + ")");
  for (double v : audio) require(std::isfinite(v), ErrorKind::data, "non-finite audio sample");
  const Index frames = 1 + (m - L) / hop;
  const Index F = L / 2;
  const double bin_hz = fs_hz / static_cast<double>(L);

  std::vector<double> window(static_cast<std::size_t>(L), 1.0);
  if (spec.window == Window::hann) {
    for (Index i = 0; i < L; ++i)
      window[static_cast<std::size_t>(i)] =
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(L - 1));
  }

  // Sub-band edges, geometric from 50 Hz to Nyquist.
  std::vector<Index> band_of(static_cast<std::size_t>(F), -1);
  const double nyq = fs_hz / 2.0;
  if (nyq > kSubbandLowHz) {
    const double ratio = std::pow(nyq / kSubbandLowHz, 1.0 / static_cast<double>(kSubbands));
    for (Index k = 1; k <= F; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f < kSubbandLowHz) continue;
      auto b = static_cast<Index>(std::floor(std::log(f / kSubbandLowHz) / std::log(ratio)));
      band_of[static_cast<std::size_t>(k - 1)] = std::min(b, kSubbands - 1);
    }
  }

  std::vector<Spectrum> spectra(static_cast<std::size_t>(frames));
#pragma omp parallel
  {
    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(L));
    std::vector<std::complex<double>> out;
#pragma omp for schedule(static)
    for (Index t = 0; t < frames; ++t) {
      const Index start = t * hop;
      for (Index i = 0; i < L; ++i)
        buf[static_cast<std::size_t>(i)] = audio[static_cast<std::size_t>(start + i)] * window[static_cast<std::size_t>(i)];
      fft.fwd(out, buf);
      Spectrum& s = spectra[static_cast<std::size_t>(t)];
      s.mag.resize(static_cast<std::size_t>(F));
      double sum = 0.0;
      for (Index k = 1; k <= F; ++k) {
        s.mag[static_cast<std::size_t>(k - 1)] = std::abs(out[static_cast<std::size_t>(k)]);
        sum += s.mag[static_cast<std::size_t>(k - 1)];
      }
      s.norm = s.mag;
      if (sum > 0.0)
        for (auto& v : s.norm) v /= sum;
    }
  }

  TimeSeries res;
  res.fs_hz = fs_hz / static_cast<double>(hop);
  res.labels.assign(feature_names().begin(), feature_names().end());
  res.data = Matrix::Zero(frames, kFeatureCount);
  const double logF = std::log(static_cast<double>(F));

#pragma omp parallel for schedule(static)
  for (Index t = 0; t < frames; ++t) {
    const Index start = t * hop;
    const auto& M = spectra[static_cast<std::size_t>(t)].mag;
    const auto& P = spectra[static_cast<std::size_t>(t)].norm;
    auto row = res.data.row(t);

    Index crossings = 0;
    for (Index i = 1; i < L; ++i) {
      const bool a = audio[static_cast<std::size_t>(start + i - 1)] >= 0.0;
      const bool b = audio[static_cast<std::size_t>(start + i)] >= 0.0;
      crossings += a != b ? 1 : 0;
    }
    row[kZcr] = static_cast<double>(crossings);

    double sum = 0.0, fsum = 0.0, maxm = 0.0, minm = M[0], sumsq = 0.0, logsum = 0.0;
    bool has_zero = false;
    for (Index k = 1; k <= F; ++k) {
      const double v = M[static_cast<std::size_t>(k - 1)];
      sum += v;
      fsum += static_cast<double>(k) * bin_hz * v;
      maxm = std::max(maxm, v);
      minm = std::min(minm, v);
      sumsq += v * v;
      if (v > 0.0) {
        logsum += std::log(v);
      } else {
        has_zero = true;
      }
    }
    row[kHighLowRatio] = maxm / std::max(minm, 1e-12);
    row[kRms] = std::sqrt(sumsq / static_cast<double>(F));
    if (sum > 0.0) {
      const double C = fsum / sum;
      row[kCentroid] = C;
      double var = 0.0, cum = 0.0, ent = 0.0;
      Index roll = F;
      bool roll_set = false;
      for (Index k = 1; k <= F; ++k) {
        const double v = M[static_cast<std::size_t>(k - 1)];
        const double f = static_cast<double>(k) * bin_hz;
        var += (f - C) * (f - C) * v;
        cum += v;
        if (!roll_set && cum >= 0.85 * sum) {
          roll = k;
          roll_set = true;
        }
        const double p = P[static_cast<std::size_t>(k - 1)];
        if (p > 0.0) ent -= p * std::log(p);
      }
      row[kSpread] = std::sqrt(var / sum);
      row[kRolloff] = static_cast<double>(roll) * bin_hz;
      row[kEntropy] = F > 1 ? std::clamp(ent / logF, 0.0, 1.0) : 0.0;
      row[kFlatness] =
          has_zero ? 0.0 : std::clamp(std::exp(logsum / static_cast<double>(F)) / (sum / static_cast<double>(F)), 0.0, 1.0);

      std::vector<double> peaks;
      for (Index k = 2; k < F; ++k) {
        const double v = M[static_cast<std::size_t>(k - 1)];
        if (v > M[static_cast<std::size_t>(k - 2)] && v >= M[static_cast<std::size_t>(k)] && v > 0.1 * maxm)
          peaks.push_back(static_cast<double>(k) * bin_hz);
      }
      if (peaks.size() >= 2) {
        double dist = 0.0;
        for (std::size_t i = 0; i < peaks.size(); ++i)
          for (std::size_t j = i + 1; j < peaks.size(); ++j) dist += peaks[j] - peaks[i];
        const double pairs = 0.5 * static_cast<double>(peaks.size() * (peaks.size() - 1));
        row[kRoughness] = dist / pairs;
      }
    }

    if (t > 0) {
      const auto& Q = spectra[static_cast<std::size_t>(t - 1)].norm;
      double flux = 0.0;
      for (Index k = 0; k < F; ++k) {
        const double s = (Q[static_cast<std::size_t>(k)] - P[static_cast<std::size_t>(k)]);
        flux += s * s;
        const Index b = band_of[static_cast<std::size_t>(k)];
        if (b >= 0) row[kSubbandFlux0 + b] += s * s;
      }
      row[kFlux] = std::sqrt(flux);
    }
  }
  return res;
}

Stimulus3d stimulus_3d(const TimeSeries& features) {
  require(features.channels() == kFeatureCount, ErrorKind::shape,
          "expected " + std::to_string(kFeatureCount) + " feature columns");
  require(features.samples() >= 2, ErrorKind::degenerate, "need at least 2 frames");
  features.validate();
  const Index m = features.samples();
  std::vector<Index> keep;
  Stimulus3d out;
  for (Index j = 0; j < kFeatureCount; ++j) {
    const double lo = features.data.col(j).minCoeff();
    const double hi = features.data.col(j).maxCoeff();
    if (hi > lo) {
      keep.push_back(j);
    } else {
      out.excluded.push_back(feature_names()[static_cast<std::size_t>(j)]);
    }
  }
  require(!keep.empty(), ErrorKind::degenerate, "all feature columns are constant");
  Matrix Z(m, static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const Vector c = features.data.col(keep[i]);
    const double mu = c.mean();
    const double sd = std::sqrt((c.array() - mu).square().sum() / static_cast<double>(m - 1));
    Z.col(static_cast<Index>(i)) = (c.array() - mu) / sd;
  }
  const PcaTransform pca = fit_pca(Z, 1);
  out.data.fs_hz = features.fs_hz;
  out.data.labels = {"pc1", "rms", "flux"};
  out.data.data.resize(m, 3);
  out.data.data.col(0) = apply_pca(pca, Z).col(0);
  out.data.data.col(1) = features.data.col(kRms);
  out.data.data.col(2) = features.data.col(kFlux);
  return out;
}

}  // namespace dcca
