#pragma once

#include <stdexcept>
#include <string>

namespace kronshrink {

// Error kinds used across the library. Shape mismatches, bad parameters,
// out-of-range indices, numerical failures, and size guards are kept
// distinct so callers (and the CLI exit-code mapping) can tell them apart.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct range_error : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Temporal/spatial dimension pair of a spatio-temporal covariance.
/// A covariance over p_t frames of p_s variables each is (p_t*p_s) x (p_t*p_s),
/// stored time-major: block (i,j) is the cross-covariance of frames i and j.
struct Dims {
    int p_t = 1;
    int p_s = 1;

    Dims() = default;
    Dims(int pt, int ps) : p_t(pt), p_s(ps) {
        if (pt < 1 || ps < 1) {
            throw argument_error("Dims: p_t and p_s must be >= 1, got p_t=" +
                                 std::to_string(pt) + ", p_s=" + std::to_string(ps));
        }
    }

    [[nodiscard]] int total() const { return p_t * p_s; }

    bool operator==(const Dims&) const = default;
};

}  // namespace kronshrink
