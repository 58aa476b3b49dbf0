#pragma once

#include <vector>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// Row-orthonormal (2*p_t-1) x p_t^2 projector collapsing the vectorized
/// temporal index onto diagonal offsets. Row p_t-1+j carries weight
/// 1/sqrt(p_t-|j|) on the offset-j diagonal indices K(j); rows have disjoint
/// support and unit norm, so P * P^T = I.
struct ToeplitzProjector {
    int p_t = 1;
    Vector weights;                            // c_j = 1/sqrt(p_t-|j|), index p_t-1+j
    std::vector<std::vector<int>> index_sets;  // K(j), zero-based column-major indices
    Matrix p;                                  // dense matrix form
};

/// Column-major linear indices of the offset-j diagonal of a p_t x p_t
/// matrix (j = row - column, so j > 0 is a subdiagonal). |j| must be < p_t.
[[nodiscard]] std::vector<int> diag_indices(int p_t, int j);

[[nodiscard]] ToeplitzProjector build_projector(int p_t);

/// P * r for a matrix r with p_t^2 rows (e.g. a rearranged covariance).
[[nodiscard]] Matrix apply_p(const ToeplitzProjector& proj, const Matrix& r);

/// P^T * s for a matrix s with 2*p_t-1 rows. Every column of the result,
/// unvectorized to p_t x p_t, is Toeplitz.
[[nodiscard]] Matrix apply_p_transpose(const ToeplitzProjector& proj, const Matrix& s);

}  // namespace kronshrink
