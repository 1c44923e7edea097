#pragma once

#include "dcca/signal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dcca {

enum class Mixing { linear, cubic, tanh };
enum class Temporal { white, ar1 };

// View 0 always sees the latent linearly; `mixing` applies to the others.
struct SynthSpec {
  Index n_views = 4;
  Index latent_dim = 2;
  std::vector<Index> view_dims{16, 16, 16, 8};
  std::vector<double> snr_db{0.0};  // one value for all views, or one per view
  Mixing mixing = Mixing::linear;
  Temporal temporal = Temporal::white;
  double ar_coef = 0.95;
  Index m = 50000;
  double fs_hz = 64.0;
  std::uint64_t seed = 0;

  double snr_of(Index view) const;
  void validate() const;
};

struct SynthBundle {
  TimeSeries latent;
  std::vector<TimeSeries> views;
  std::vector<Matrix> mixing;  // latent_dim x d_n, orthonormal rows
  // Best linear correlation between each view and the latent direction.
  Vector population_corr;
  SynthSpec spec;
};

Mixing parse_mixing(const std::string& s);
Temporal parse_temporal(const std::string& s);
std::string to_string(Mixing m);
std::string to_string(Temporal t);

// Unit-variance distortion applied to a standard normal latent.
double mix_value(Mixing mixing, double z);
// corr(g(z), z) for standard normal z.
double mixing_linear_corr(Mixing mixing);

SynthBundle generate(const SynthSpec& spec);

// Source feeding view n (latent passed through its mixing).
Matrix view_source(const SynthBundle& b, Index view);

// Power of the source along the mixing directions over the noise power
// along the same directions, in dB.
double empirical_snr_db(const SynthBundle& b, Index view);

}  // namespace dcca

namespace dcca {

// Noise carrier at `audio_fs` whose amplitude follows exp(0.5 * s), with
// s the (1-channel) stimulus interpolated from `stimulus.fs_hz`. Envelope
// and spectral features of the result track the stimulus.
TimeSeries synth_audio(const TimeSeries& stimulus, double audio_fs, std::uint64_t seed);

}  // namespace dcca
