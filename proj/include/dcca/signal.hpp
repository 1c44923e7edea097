#pragma once

#include "dcca/linalg.hpp"

#include <span>
#include <string>
#include <vector>

namespace dcca {

struct TimeSeries {
  Matrix data;  // samples x channels
  double fs_hz = 1.0;
  std::vector<std::string> labels;  // empty or one per channel

  Index samples() const { return data.rows(); }
  Index channels() const { return data.cols(); }
  // Throws unless fs > 0, entries are finite and labels match the channels.
  void validate() const;
};

// Windowed-sinc (Hamming) low-pass with unit DC gain; `taps` must be odd.
std::vector<double> lowpass_taps(double cutoff_hz, double fs_hz, Index taps);
// Difference of two unit-DC low-passes, so the DC gain is exactly zero.
std::vector<double> bandpass_taps(double low_hz, double high_hz, double fs_hz, Index taps);

// Linear-phase FIR resampling: anti-alias low-pass with half-band
// decimation stages, then linear interpolation onto the new grid.
Matrix resample(const Matrix& X, double fs_in, double fs_out);
Index resampled_length(Index m, double fs_in, double fs_out);

inline constexpr double kDefaultSmoothMs = 15.625;

// Square, moving-average over smooth_ms, resample, then cube root.
TimeSeries envelope(std::span<const double> audio, double fs_in, double fs_out,
                    double smooth_ms = kDefaultSmoothMs, bool compress = true);

// Zero-phase band-pass with 2 * fs + 1 taps.
TimeSeries bandpass(const TimeSeries& X, double low_hz, double high_hz);
Index bandpass_order(double fs_hz);

struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
  std::vector<double> taps;  // odd length, symmetric
};

struct FilterBank {
  std::vector<Band> bands;
  double fs_hz = 0.0;

  Index size() const { return static_cast<Index>(bands.size()); }
  Index order() const { return bands.empty() ? 0 : static_cast<Index>(bands[0].taps.size()) - 1; }
  double center_hz(Index band) const;
};

inline constexpr Index kFilterBankBands = 21;

// Octave-wide bands with centres geometrically spaced from 0.25 Hz to
// 0.8 * Nyquist; order = fs rounded to an even integer.
FilterBank design_filterbank(double fs_hz, Index bands = kFilterBankBands, double first_center_hz = 0.25,
                             double last_center_fraction = 0.8);

// Output column = channel * bands + band.
TimeSeries apply_filterbank(const TimeSeries& X, const FilterBank& fb);

struct PcaTransform {
  Vector mean;
  Matrix components;           // channels x k, orthonormal columns
  Vector explained_variance;   // non-increasing
};

PcaTransform fit_pca(const Matrix& X, Index k);
Matrix apply_pca(const PcaTransform& t, const Matrix& X);
Matrix reconstruct_pca(const PcaTransform& t, const Matrix& scores);

// Output column = channel * lags + lag; row i of lag j holds row i - j.
TimeSeries time_lag(const TimeSeries& X, Index lags);

// Leading samples contaminated by zero padding.
inline Index burn_in(Index lags, Index filter_order) { return std::max(lags, filter_order); }

}  // namespace dcca
