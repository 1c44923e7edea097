#include "dcca/synth.hpp"

#include "dcca/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dcca {

namespace {

// E[tanh(z)^2] and E[z tanh(z)] by Gauss-Hermite-free trapezoid quadrature.
struct TanhMoments {
  double second;
  double cross;
};

TanhMoments tanh_moments() {
  double s2 = 0.0, sx = 0.0;
  const double h = 1e-3;
  for (double z = -12.0; z <= 12.0; z += h) {
    const double w = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * h;
    const double t = std::tanh(z);
    s2 += w * t * t;
    sx += w * z * t;
  }
  return {s2, sx};
}

const TanhMoments& moments() {
  static const TanhMoments m = tanh_moments();
  return m;
}

}  // namespace

double SynthSpec::snr_of(Index view) const {
  return snr_db.size() == 1 ? snr_db[0] : snr_db.at(static_cast<std::size_t>(view));
}

void SynthSpec::validate() const {
  require(n_views >= 2, ErrorKind::config, "synthetic data needs at least 2 views");
  require(latent_dim >= 1, ErrorKind::config, "latent_dim must be >= 1");
  require(static_cast<Index>(view_dims.size()) == n_views, ErrorKind::config,
          "view_dims must list one size per view");
  for (Index d : view_dims) require(d >= latent_dim, ErrorKind::config, "view dims must be >= latent_dim");
  require(snr_db.size() == 1 || static_cast<Index>(snr_db.size()) == n_views, ErrorKind::config,
          "snr_db must hold one value or one per view");
  for (double s : snr_db) require(std::isfinite(s), ErrorKind::config, "snr_db must be finite");
  require(m >= 2, ErrorKind::config, "need at least 2 samples");
  require(fs_hz > 0.0, ErrorKind::config, "sampling rate must be positive");
  require(temporal == Temporal::white || (ar_coef > -1.0 && ar_coef < 1.0), ErrorKind::config,
          "AR coefficient must lie in (-1, 1)");
}

Mixing parse_mixing(const std::string& s) {
  if (s == "linear") return Mixing::linear;
  if (s == "cubic") return Mixing::cubic;
  if (s == "tanh") return Mixing::tanh;
  fail(ErrorKind::config, "unknown mixing '" + s + "'");
}

Temporal parse_temporal(const std::string& s) {
  if (s == "white") return Temporal::white;
  if (s == "ar1") return Temporal::ar1;
  fail(ErrorKind::config, "unknown temporal model '" + s + "'");
}

std::string to_string(Mixing m) {
  switch (m) {
    case Mixing::linear: return "linear";
    case Mixing::cubic: return "cubic";
    case Mixing::tanh: return "tanh";
  }
  return "linear";
}

std::string to_string(Temporal t) { return t == Temporal::white ? "white" : "ar1"; }

double mix_value(Mixing mixing, double z) {
  switch (mixing) {
    case Mixing::linear: return z;
    case Mixing::cubic: return z * z * z / std::sqrt(15.0);  // E[z^6] = 15
    case Mixing::tanh: return std::tanh(z) / std::sqrt(moments().second);
  }
  return z;
}

double mixing_linear_corr(Mixing mixing) {
  switch (mixing) {
    case Mixing::linear: return 1.0;
    case Mixing::cubic: return 3.0 / std::sqrt(15.0);  // E[z^4] / sqrt(E[z^6])
    case Mixing::tanh: return moments().cross / std::sqrt(moments().second);
  }
  return 1.0;
}

SynthBundle generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index m = spec.m, k = spec.latent_dim;

  SynthBundle b;
  b.spec = spec;
  Matrix z(m, k);
  if (spec.temporal == Temporal::white) {
    for (Index j = 0; j < k; ++j)
      for (Index i = 0; i < m; ++i) z(i, j) = gauss(rng);
  } else {
    const double a = spec.ar_coef, s = std::sqrt(1.0 - a * a);
    for (Index j = 0; j < k; ++j) {
      z(0, j) = gauss(rng);
      for (Index i = 1; i < m; ++i) z(i, j) = a * z(i - 1, j) + s * gauss(rng);
    }
  }
  b.latent.data = z;
  b.latent.fs_hz = spec.fs_hz;
  for (Index j = 0; j < k; ++j) b.latent.labels.push_back("z" + std::to_string(j));

  b.population_corr.resize(spec.n_views);
  for (Index n = 0; n < spec.n_views; ++n) {
    const Index d = spec.view_dims[static_cast<std::size_t>(n)];
    Matrix G(d, k);
    for (Index j = 0; j < k; ++j)
      for (Index i = 0; i < d; ++i) G(i, j) = gauss(rng);
    const Matrix Q = G.householderQr().householderQ() * Matrix::Identity(d, k);
    Matrix A = Q.transpose();  // k x d, orthonormal rows
    b.mixing.push_back(A);

    const double snr = std::pow(10.0, spec.snr_of(n) / 10.0);
    const double sigma = 1.0 / std::sqrt(snr);
    Matrix X = view_source(b, n) * A;
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < m; ++i) X(i, j) += sigma * gauss(rng);
    TimeSeries ts;
    ts.data = std::move(X);
    ts.fs_hz = spec.fs_hz;
    for (Index j = 0; j < d; ++j) ts.labels.push_back("v" + std::to_string(n) + "_c" + std::to_string(j));
    b.views.push_back(std::move(ts));

    const Mixing mix = n == 0 ? Mixing::linear : spec.mixing;
    b.population_corr[n] = mixing_linear_corr(mix) * std::sqrt(snr / (1.0 + snr));
  }
  return b;
}

Matrix view_source(const SynthBundle& b, Index view) {
  require(view >= 0 && view < static_cast<Index>(b.mixing.size()), ErrorKind::config,
          "view index out of range");
  const Mixing mix = view == 0 ? Mixing::linear : b.spec.mixing;
  return b.latent.data.unaryExpr([mix](double z) { return mix_value(mix, z); });
}

double empirical_snr_db(const SynthBundle& b, Index view) {
  require(view >= 0 && view < static_cast<Index>(b.views.size()), ErrorKind::config, "view index out of range");
  const Matrix& A = b.mixing[static_cast<std::size_t>(view)];
  const Matrix S = view_source(b, view);
  const Matrix P = b.views[static_cast<std::size_t>(view)].data * A.transpose();
  const double noise = (P - S).squaredNorm();
  return 10.0 * std::log10(S.squaredNorm() / noise);
}

}  // namespace dcca

namespace dcca {

TimeSeries synth_audio(const TimeSeries& stimulus, double audio_fs, std::uint64_t seed) {
  require(stimulus.channels() == 1, ErrorKind::config, "synthetic audio needs a 1-channel stimulus");
  require(audio_fs >= 2.0 * stimulus.fs_hz, ErrorKind::config, "audio rate must be at least twice the stimulus rate");
  const Matrix gain = resample(stimulus.data, stimulus.fs_hz, audio_fs);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TimeSeries out;
  out.fs_hz = audio_fs;
  out.data.resize(gain.rows(), 1);
  for (Index i = 0; i < gain.rows(); ++i) out.data(i, 0) = gauss(rng) * std::exp(0.5 * gain(i, 0));
  out.labels = {"audio"};
  return out;
}

}  // namespace dcca
