#include "dcca/metrics.hpp"

#include "dcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace dcca {

namespace {

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size() - 1);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  fail(ErrorKind::numeric, "incomplete beta continued fraction did not converge");
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::shape, "pearson: sequences differ in length");
  require(a.size() >= 2, ErrorKind::degenerate, "pearson: need at least 2 samples");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0, amax = 0.0, bmax = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
    amax = std::max(amax, std::abs(a[i]));
    bmax = std::max(bmax, std::abs(b[i]));
  }
  // Rounding in the mean leaves a residue of order eps * |x| for constant input.
  const double n = static_cast<double>(a.size());
  const double eps = 1e-13;
  require(saa > n * (eps * amax) * (eps * amax) && sbb > n * (eps * bmax) * (eps * bmax),
          ErrorKind::degenerate, "pearson: constant input");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double pearson(const Vector& a, const Vector& b) {
  return pearson(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                 std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

double z_average(std::span<const double> corrs) {
  require(!corrs.empty(), ErrorKind::input, "z_average of an empty sequence");
  std::vector<double> z;
  z.reserve(corrs.size());
  for (double r : corrs) {
    require(std::isfinite(r), ErrorKind::numeric, "z_average: non-finite correlation");
    require(std::abs(r) < 1.0, ErrorKind::boundary,
            "z_average: |r| = 1 has no Fisher transform (r = " + std::to_string(r) + ")");
    z.push_back(std::atanh(r));
  }
  // The mean of identical values is that value; skip the round trip.
  if (std::all_of(corrs.begin(), corrs.end(), [&](double r) { return r == corrs[0]; })) return corrs[0];
  // Sum by increasing magnitude, equal magnitudes netted first, so the result
  // depends only on the multiset and negating every input negates it exactly.
  std::sort(z.begin(), z.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  double s = 0.0;
  for (std::size_t i = 0; i < z.size();) {
    const double mag = std::abs(z[i]);
    long net = 0;
    for (; i < z.size() && std::abs(z[i]) == mag; ++i) net += z[i] > 0.0 ? 1 : z[i] < 0.0 ? -1 : 0;
    const double v = net > 0 ? mag : -mag;
    for (long k = 0; k < std::abs(net); ++k) s += v;
  }
  return std::tanh(s / static_cast<double>(z.size()));
}

double cohens_d_prime(std::span<const double> aligned, std::span<const double> misaligned) {
  require(aligned.size() >= 2 && misaligned.size() >= 2, ErrorKind::degenerate,
          "d': need at least 2 values per group");
  const double v1 = sample_variance(aligned), v2 = sample_variance(misaligned);
  require(v1 + v2 > 0.0, ErrorKind::degenerate, "d': both groups have zero variance");
  return std::abs(mean(aligned) - mean(misaligned)) / std::sqrt(0.5 * (v1 + v2));
}

std::vector<double> aligned_segment_corrs(const Vector& stimulus, const Vector& response,
                                          Index length, Index n_segments, std::uint64_t seed,
                                          Index first) {
  require(stimulus.size() == response.size(), ErrorKind::shape,
          "segment signals differ in length");
  require(length >= 2 && n_segments >= 1, ErrorKind::config, "segment length / count too small");
  require(first >= 0 && first + length <= stimulus.size(), ErrorKind::input,
          "recording shorter than one segment");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> start(first, stimulus.size() - length);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_segments));
  for (Index k = 0; k < n_segments; ++k) {
    const Index s = start(rng);
    out.push_back(pearson(Vector(stimulus.segment(s, length)), Vector(response.segment(s, length))));
  }
  return out;
}

SegmentClassResult segment_classify(const Vector& stimulus, const Vector& response, double fs_hz,
                                    double seg_seconds, Index n_segments, std::uint64_t seed,
                                    Index first) {
  require(fs_hz > 0.0 && seg_seconds > 0.0, ErrorKind::config, "segment length must be positive");
  const auto L = static_cast<Index>(std::llround(seg_seconds * fs_hz));
  const Index usable = stimulus.size() - first;
  require(usable >= 2 * L, ErrorKind::input,
          "recording of " + std::to_string(usable) + " samples too short for misaligned " +
              std::to_string(seg_seconds) + " s segments");
  SegmentClassResult res;
  res.segment_seconds = seg_seconds;
  res.aligned_corrs = aligned_segment_corrs(stimulus, response, L, n_segments, seed, first);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Index> start(first, stimulus.size() - L);
  res.misaligned_corrs.reserve(static_cast<std::size_t>(n_segments));
  while (static_cast<Index>(res.misaligned_corrs.size()) < n_segments) {
    const Index s1 = start(rng), s2 = start(rng);
    if (std::abs(s1 - s2) < L) continue;
    res.misaligned_corrs.push_back(
        pearson(Vector(stimulus.segment(s1, L)), Vector(response.segment(s2, L))));
  }
  res.d_prime = n_segments >= 2 ? cohens_d_prime(res.aligned_corrs, res.misaligned_corrs) : 0.0;
  return res;
}

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::config, "incomplete beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, ErrorKind::config, "incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  require(df > 0.0, ErrorKind::config, "t distribution needs df > 0");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, Alternative) {
  require(a.size() == b.size(), ErrorKind::shape, "paired t-test: unequal lengths");
  require(a.size() >= 2, ErrorKind::degenerate, "paired t-test: need at least 2 pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double var = sample_variance(diff);
  require(var > 0.0, ErrorKind::degenerate, "paired t-test: differences have zero variance");
  const double n = static_cast<double>(diff.size());
  TTestResult r;
  r.df = static_cast<Index>(diff.size()) - 1;
  r.t = mean(diff) / std::sqrt(var / n);
  r.p = student_t_sf(r.t, static_cast<double>(r.df));
  return r;
}

double bonferroni(double alpha, Index comparisons) {
  require(comparisons >= 1, ErrorKind::config, "bonferroni: need at least one comparison");
  return alpha / static_cast<double>(comparisons);
}

double ks_uniform_distance(std::vector<double> sample) {
  require(!sample.empty(), ErrorKind::input, "KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace dcca
