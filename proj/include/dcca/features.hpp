#pragma once

#include "dcca/signal.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace dcca {

enum class Window { rectangular, hann };

struct FrameSpec {
  double frame_ms = 25.0;
  double hop_fraction = 0.5;
  Window window = Window::rectangular;
};

inline constexpr Index kFeatureCount = 20;

// Column order of extract_features.
enum FeatureColumn : Index {
  kZcr = 0,
  kCentroid,
  kHighLowRatio,
  kSpread,
  kRolloff,
  kEntropy,
  kFlatness,
  kRoughness,
  kRms,
  kFlux,
  kSubbandFlux0,  // ten sub-band fluxes follow
};

const std::array<std::string, kFeatureCount>& feature_names();

// Frame and hop length in samples for a given rate.
Index frame_length(const FrameSpec& spec, double fs_hz);
Index hop_length(const FrameSpec& spec, double fs_hz);

// 20 features per frame; the result's rate is fs / hop.
TimeSeries extract_features(std::span<const double> audio, double fs_hz, const FrameSpec& spec = {});

struct Stimulus3d {
  TimeSeries data;                    // pc1, rms, flux
  std::vector<std::string> excluded;  // constant feature columns left out of the PCA
};

Stimulus3d stimulus_3d(const TimeSeries& features);

}  // namespace dcca
