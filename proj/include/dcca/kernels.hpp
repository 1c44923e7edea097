#pragma once

// Data-parallel kernels. Each OpenMP kernel splits its work into pieces whose
// size does not depend on the thread count, so results are bit-identical for
// any number of threads. The *_serial variants are plain loops kept as
// references for the tests and the benchmark.

#include "dcca/linalg.hpp"

#include <span>
#include <vector>

namespace dcca::kernels {

// A^T B.
Matrix cross_product(const Matrix& A, const Matrix& B);
Matrix cross_product_serial(const Matrix& A, const Matrix& B);

// Centred ("same" length) FIR convolution with zero padding.
void convolve_same(std::span<const double> x, std::span<const double> taps,
                   std::span<double> out);

// Forward-backward filtering of one sequence.
std::vector<double> zero_phase(std::span<const double> x, std::span<const double> taps);

// Zero-phase filtering of every column of X.
Matrix filter_columns(const Matrix& X, std::span<const double> taps);
Matrix filter_columns_serial(const Matrix& X, std::span<const double> taps);

// Every column through every filter, output column = channel * nbands + band.
Matrix filterbank(const Matrix& X, const std::vector<std::vector<double>>& bank);
Matrix filterbank_serial(const Matrix& X, const std::vector<std::vector<double>>& bank);

// Delayed copies, output column = channel * lags + lag, zero-padded.
Matrix lag_embed(const Matrix& X, Index lags);
Matrix lag_embed_serial(const Matrix& X, Index lags);

}  // namespace dcca::kernels
