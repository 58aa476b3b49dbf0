#pragma once

#include <cstdint>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/rng.hpp"

namespace kronshrink::testing {

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = normal_icdf(rng.next_unit());
        }
    }
    return m;
}

inline Matrix random_symmetric(int d, std::uint64_t seed) {
    Matrix m = random_matrix(d, d, seed);
    return 0.5 * (m + m.transpose()).eval();
}

inline StCovariance random_covariance(const Dims& dims, std::uint64_t seed) {
    return StCovariance(dims, random_symmetric(dims.total(), seed));
}

/// Random symmetric positive definite covariance (Gram matrix plus a ridge).
inline StCovariance random_spd_covariance(const Dims& dims, std::uint64_t seed) {
    const int d = dims.total();
    Matrix g = random_matrix(d, d + 2, seed);
    Matrix m = g * g.transpose() / static_cast<double>(d);
    m.diagonal().array() += 0.5;
    return StCovariance(dims, 0.5 * (m + m.transpose()).eval());
}

inline Matrix random_orthogonal(int d, std::uint64_t seed) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(d, d, seed));
    return qr.householderQ();
}

inline double rel_error(const Matrix& a, const Matrix& b) {
    const double denom = b.norm();
    return denom > 0.0 ? (a - b).norm() / denom : (a - b).norm();
}

inline bool is_block_toeplitz(const Matrix& m, const Dims& dims, double tol) {
    for (int i = 0; i + 1 < dims.p_t; ++i) {
        for (int j = 0; j + 1 < dims.p_t; ++j) {
            const Matrix a = block_of(m, dims, i, j);
            const Matrix b = block_of(m, dims, i + 1, j + 1);
            if ((a - b).cwiseAbs().maxCoeff() > tol) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace kronshrink::testing
