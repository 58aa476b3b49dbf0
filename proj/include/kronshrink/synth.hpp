#pragma once

#include <cstdint>
#include <vector>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// AR(1)-style covariance: entry (i,j) = c * a^|i-j|. Positive definite and
/// Toeplitz for |a| < 1, c > 0.
struct ARSpec {
    double a = 0.0;
    double c = 1.0;
    int dim = 1;
};

[[nodiscard]] Matrix ar_covariance(const ARSpec& spec);

struct KronSumTerm {
    double scale = 1.0;
    ARSpec temporal;
    ARSpec spatial;
};

/// Ground-truth covariance as a sum of Kronecker products of AR factors.
struct KronSumSpec {
    std::vector<KronSumTerm> terms;
    Dims dims;
};

[[nodiscard]] StCovariance kron_sum_covariance(const KronSumSpec& spec);

/// Recipe for corrupting a clean covariance: zeroed row/column pairs, a
/// diagonal load, and sparse off-diagonal hits whose magnitude decays
/// geometrically with distance from the diagonal. With block_toeplitz set,
/// deletions pick whole spatial coordinates and sparse hits are replicated
/// across temporal lags, so block-Toeplitz inputs stay block-Toeplitz
/// (n_deleted_pairs then counts spatial coordinates).
struct CorruptionSpec {
    int n_deleted_pairs = 0;
    double diag_load = 0.0;
    int n_sparse = 0;
    double base_magnitude = 0.0;
    double decay = 1.0;  // in (0, 1]
    bool block_toeplitz = false;
    double psd_floor = 0.0;
    std::uint64_t seed = 0;
};

struct CorruptionResult {
    StCovariance corrupted;
    StCovariance gamma0;        // corrupted minus (input with deleted rows/cols zeroed)
    std::vector<int> deleted;   // zeroed variable indices (expanded per frame in BT mode)
};

[[nodiscard]] CorruptionResult corrupt(const StCovariance& sigma, const CorruptionSpec& spec);

/// n samples, one per row, of a (p_t*p_s)-dimensional process.
struct SampleSet {
    Dims dims;
    long n = 0;
    Matrix data;
    std::uint64_t seed = 0;
};

/// IID draws from N(0, sigma) through the symmetric eigenvalue square root.
/// Normal variates come from the counter-addressed uniform stream, so a
/// given (sigma, n, seed) reproduces bit-identical samples everywhere.
[[nodiscard]] SampleSet sample_gaussian(const StCovariance& sigma, long n, std::uint64_t seed);

/// Mean-removed sample covariance with divisor n.
[[nodiscard]] StCovariance sample_covariance(const SampleSet& samples);
[[nodiscard]] StCovariance sample_covariance(const Matrix& data, const Dims& dims);

}  // namespace kronshrink
