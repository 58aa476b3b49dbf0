#include "kronshrink/rng.hpp"

#include <cmath>

namespace kronshrink {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

double unit_from_bits(std::uint64_t z) {
    // 53 random bits into (0,1); offset keeps 0 and 1 unreachable so the
    // value is always a valid argument for normal_icdf.
    return static_cast<double>(z >> 11) * 0x1.0p-53 + 0x1.0p-54;
}
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a * kGolden + mix64(b + kGolden));
}

std::uint64_t SplitMix64::next() {
    state_ += kGolden;
    return mix64(state_);
}

double SplitMix64::next_unit() { return unit_from_bits(next()); }

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
    if (n == 0) {
        throw argument_error("SplitMix64::next_below: bound must be positive");
    }
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t z = next();
    while (z >= limit) {
        z = next();
    }
    return z % n;
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    return unit_from_bits(mix64(seed + (counter + 1) * kGolden));
}

double normal_icdf(double p) {
    // Wichura (1988), algorithm AS 241, PPND16.
    if (!(p > 0.0 && p < 1.0)) {
        throw argument_error("normal_icdf: p must lie strictly inside (0, 1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

std::vector<int> sample_without_replacement(int n, int k, SplitMix64& rng) {
    if (n < 0 || k < 0 || k > n) {
        throw argument_error("sample_without_replacement: need 0 <= k <= n");
    }
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pool[static_cast<std::size_t>(i)] = i;
    }
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.next_below(static_cast<std::uint64_t>(n - i)) + static_cast<std::uint64_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace kronshrink
