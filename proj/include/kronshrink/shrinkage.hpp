#pragma once

#include "kronshrink/rearrange.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// Thin singular value decomposition m = u * diag(sigma) * v^T with sigma
/// nonincreasing and u, v having orthonormal columns.
struct SvdResult {
    Matrix u;
    Vector sigma;
    Matrix v;

    /// Number of singular values above rel_tol * sigma(0).
    [[nodiscard]] int rank(double rel_tol = 1e-14) const;
};

/// Thin SVD; throws numerical_error if the decomposition does not converge.
[[nodiscard]] SvdResult svd(const Matrix& m);

/// Soft singular value thresholding U (diag(sigma) - lambda I)_+ V^T, the
/// proximal operator of lambda * nuclear norm.
[[nodiscard]] Matrix svt(const Matrix& m, double lambda);

/// Entrywise soft thresholding sign(m) (|m| - lambda)_+, the proximal
/// operator of lambda * 1-norm.
[[nodiscard]] Matrix soft(const Matrix& m, double lambda);

/// Row-weighted soft thresholding: row k of m thresholded at
/// lambda * row_weights(k). Weights must be positive, one per row.
[[nodiscard]] Matrix weighted_row_soft(const Matrix& m, double lambda, const Vector& row_weights);

[[nodiscard]] double spectral_norm(const Matrix& m);
[[nodiscard]] double nuclear_norm(const Matrix& m);

}  // namespace kronshrink
