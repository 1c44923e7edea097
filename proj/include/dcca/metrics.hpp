#pragma once

#include "dcca/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dcca {

double pearson(std::span<const double> a, std::span<const double> b);
double pearson(const Vector& a, const Vector& b);

// tanh(mean(atanh(r))).
double z_average(std::span<const double> corrs);

// |mu1 - mu2| / sqrt((var1 + var2) / 2), sample variances.
double cohens_d_prime(std::span<const double> aligned, std::span<const double> misaligned);

struct SegmentClassResult {
  double segment_seconds = 0.0;
  std::vector<double> aligned_corrs;
  std::vector<double> misaligned_corrs;
  double d_prime = 0.0;
};

// Correlations of n windows of `length` samples starting at the same
// random offset in both signals, drawn from [first, m - length].
std::vector<double> aligned_segment_corrs(const Vector& stimulus, const Vector& response,
                                          Index length, Index n_segments, std::uint64_t seed,
                                          Index first = 0);

// Aligned windows against windows whose starts differ by at least one
// segment length, both drawn from the same recording.
SegmentClassResult segment_classify(const Vector& stimulus, const Vector& response, double fs_hz,
                                    double seg_seconds, Index n_segments, std::uint64_t seed,
                                    Index first = 0);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  Index df = 0;
};

enum class Alternative { greater };

// Paired one-tailed test of mean(a - b) > 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          Alternative alternative = Alternative::greater);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

// Per-comparison threshold for `comparisons` tests at family level alpha.
double bonferroni(double alpha, Index comparisons);

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform_distance(std::vector<double> sample);

}  // namespace dcca
