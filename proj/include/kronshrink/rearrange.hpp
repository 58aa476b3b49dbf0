#pragma once

#include <Eigen/Dense>

#include "kronshrink/types.hpp"

namespace kronshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative Frobenius asymmetry ||M - M^T||_F / ||M||_F (0 for the zero matrix).
[[nodiscard]] double symmetry_gap(const Matrix& m);

/// Symmetric (p_t*p_s) x (p_t*p_s) spatio-temporal covariance, time-major
/// block order. Construction rejects matrices whose relative Frobenius
/// asymmetry exceeds 1e-12; values are immutable afterwards.
class StCovariance {
public:
    StCovariance(Dims dims, Matrix entries);

    /// Construction bypassing the symmetry check, for matrices the caller
    /// already controls (solver output before symmetrization, exact sums).
    static StCovariance unchecked(Dims dims, Matrix entries);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] const Matrix& matrix() const { return entries_; }
    [[nodiscard]] int size() const { return dims_.total(); }

    /// Temporal block (i,j), zero-based, the p_s x p_s cross-covariance of
    /// frames i and j.
    [[nodiscard]] Matrix block(int i, int j) const;

private:
    struct unchecked_t {};
    StCovariance(unchecked_t, Dims dims, Matrix entries);

    Dims dims_;
    Matrix entries_;
};

/// p_t^2 x p_s^2 rearranged form of a spatio-temporal matrix. Kronecker sums
/// in the original domain become low-rank matrices here.
class RearrangedMatrix {
public:
    RearrangedMatrix(Dims dims, Matrix entries);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] const Matrix& matrix() const { return entries_; }

private:
    Dims dims_;
    Matrix entries_;
};

/// Zero-based temporal block (i,j) of a raw (p_t*p_s) x (p_t*p_s) matrix.
[[nodiscard]] Matrix block_of(const Matrix& m, const Dims& dims, int i, int j);

/// Rearrangement operator: each temporal block becomes one row, blocks
/// enumerated so that rearrange(kron(A, B)) == vec(A) * vec(B)^T with
/// column-major vec. A pure entry permutation, hence a Frobenius isometry.
[[nodiscard]] Matrix rearrange(const Matrix& m, const Dims& dims);
[[nodiscard]] RearrangedMatrix rearrange(const StCovariance& m);

/// Exact inverse of rearrange (bit-for-bit; no symmetrization is applied).
[[nodiscard]] Matrix inverse_rearrange(const Matrix& r, const Dims& dims);
[[nodiscard]] Matrix inverse_rearrange(const RearrangedMatrix& r);

/// Kronecker product; entry ((i*q)+k, (j*q)+l) = a(i,j) * b(k,l) for q x q b.
[[nodiscard]] Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace kronshrink
