#include "kronshrink/toeplitz.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace kronshrink {

std::vector<int> diag_indices(int p_t, int j) {
    if (p_t < 1) {
        throw argument_error("diag_indices: p_t must be >= 1");
    }
    if (std::abs(j) >= p_t) {
        throw range_error("diag_indices: offset " + std::to_string(j) +
                          " out of range for p_t=" + std::to_string(p_t));
    }
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(p_t - std::abs(j)));
    const int r0 = j > 0 ? j : 0;
    const int c0 = j > 0 ? 0 : -j;
    for (int k = 0; k < p_t - std::abs(j); ++k) {
        idx.push_back((c0 + k) * p_t + (r0 + k));
    }
    return idx;
}

ToeplitzProjector build_projector(int p_t) {
    if (p_t < 1) {
        throw argument_error("build_projector: p_t must be >= 1");
    }
    ToeplitzProjector proj;
    proj.p_t = p_t;
    const int rows = 2 * p_t - 1;
    proj.weights = Vector(rows);
    proj.index_sets.resize(static_cast<std::size_t>(rows));
    proj.p = Matrix::Zero(rows, p_t * p_t);
    for (int j = -p_t + 1; j <= p_t - 1; ++j) {
        const int row = p_t - 1 + j;
        const double c = 1.0 / std::sqrt(static_cast<double>(p_t - std::abs(j)));
        proj.weights(row) = c;
        proj.index_sets[static_cast<std::size_t>(row)] = diag_indices(p_t, j);
        for (int i : proj.index_sets[static_cast<std::size_t>(row)]) {
            proj.p(row, i) = c;
        }
    }
    return proj;
}

Matrix apply_p(const ToeplitzProjector& proj, const Matrix& r) {
    if (r.rows() != proj.p.cols()) {
        throw dimension_error("apply_p: expected " + std::to_string(proj.p.cols()) +
                              " rows, got " + std::to_string(r.rows()));
    }
    return proj.p * r;
}

Matrix apply_p_transpose(const ToeplitzProjector& proj, const Matrix& s) {
    if (s.rows() != proj.p.rows()) {
        throw dimension_error("apply_p_transpose: expected " + std::to_string(proj.p.rows()) +
                              " rows, got " + std::to_string(s.rows()));
    }
    return proj.p.transpose() * s;
}

}  // namespace kronshrink
