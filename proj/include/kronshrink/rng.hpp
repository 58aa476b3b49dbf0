#pragma once

#include <cstdint>
#include <vector>

#include "kronshrink/types.hpp"

namespace kronshrink {

/// Finalizing mixer of splitmix64 (Steele/Lea/Flood). Bijective on 64-bit words.
[[nodiscard]] std::uint64_t mix64(std::uint64_t z);

/// Order-sensitive combination of two 64-bit values into one stream seed.
[[nodiscard]] std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// splitmix64 sequential generator. Used wherever a seeded stream of draws
/// is needed; chosen over std engines so that outputs are identical across
/// platforms and standard-library versions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    /// Uniform double in the open interval (0, 1).
    double next_unit();

    /// Uniform integer in [0, n); unbiased via rejection. n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t state_;
};

/// Uniform double in (0,1) addressed purely by (seed, counter). Draw k of a
/// stream can be produced without generating draws 0..k-1.
[[nodiscard]] double counter_uniform(std::uint64_t seed, std::uint64_t counter);

/// Inverse standard normal CDF (Wichura's AS 241 PPND16 rational
/// approximations, accurate to about 1e-15 over (0,1)).
[[nodiscard]] double normal_icdf(double p);

/// k distinct values from {0,...,n-1} via partial Fisher-Yates, in selection order.
[[nodiscard]] std::vector<int> sample_without_replacement(int n, int k, SplitMix64& rng);

}  // namespace kronshrink
