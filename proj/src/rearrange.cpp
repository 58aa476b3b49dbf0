#include "kronshrink/rearrange.hpp"

#include <string>
#include <utility>

namespace kronshrink {

namespace {
constexpr double kSymmetryTol = 1e-12;

void require_covariance_shape(const Dims& dims, const Matrix& m) {
    const int d = dims.total();
    if (m.rows() != d || m.cols() != d) {
        throw dimension_error("covariance must be " + std::to_string(d) + "x" +
                              std::to_string(d) + ", got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
}

void require_rearranged_shape(const Dims& dims, const Matrix& m) {
    const int rows = dims.p_t * dims.p_t;
    const int cols = dims.p_s * dims.p_s;
    if (m.rows() != rows || m.cols() != cols) {
        throw dimension_error("rearranged matrix must be " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
}
}  // namespace

double symmetry_gap(const Matrix& m) {
    const double norm = m.norm();
    if (norm == 0.0) {
        return 0.0;
    }
    return (m - m.transpose()).norm() / norm;
}

StCovariance::StCovariance(Dims dims, Matrix entries) : dims_(dims), entries_(std::move(entries)) {
    require_covariance_shape(dims_, entries_);
    const double gap = symmetry_gap(entries_);
    if (!(gap <= kSymmetryTol)) {
        throw dimension_error("covariance is not symmetric: relative asymmetry " +
                              std::to_string(gap) + " exceeds 1e-12");
    }
}

StCovariance::StCovariance(unchecked_t, Dims dims, Matrix entries)
    : dims_(dims), entries_(std::move(entries)) {
    require_covariance_shape(dims_, entries_);
}

StCovariance StCovariance::unchecked(Dims dims, Matrix entries) {
    return StCovariance(unchecked_t{}, dims, std::move(entries));
}

Matrix StCovariance::block(int i, int j) const { return block_of(entries_, dims_, i, j); }

RearrangedMatrix::RearrangedMatrix(Dims dims, Matrix entries)
    : dims_(dims), entries_(std::move(entries)) {
    require_rearranged_shape(dims_, entries_);
}

Matrix block_of(const Matrix& m, const Dims& dims, int i, int j) {
    require_covariance_shape(dims, m);
    if (i < 0 || i >= dims.p_t || j < 0 || j >= dims.p_t) {
        throw dimension_error("block index (" + std::to_string(i) + "," + std::to_string(j) +
                              ") out of range for p_t=" + std::to_string(dims.p_t));
    }
    return m.block(i * dims.p_s, j * dims.p_s, dims.p_s, dims.p_s);
}

Matrix rearrange(const Matrix& m, const Dims& dims) {
    require_covariance_shape(dims, m);
    const int pt = dims.p_t;
    const int ps = dims.p_s;
    Matrix out(pt * pt, ps * ps);
    // Row j*pt+i holds vec(block(i,j)); both the block grid and vec are
    // column-major, which is what makes rearrange(A (x) B) = vec(A) vec(B)^T.
    for (int j = 0; j < pt; ++j) {
        for (int i = 0; i < pt; ++i) {
            const int row = j * pt + i;
            for (int l = 0; l < ps; ++l) {
                for (int k = 0; k < ps; ++k) {
                    out(row, l * ps + k) = m(i * ps + k, j * ps + l);
                }
            }
        }
    }
    return out;
}

RearrangedMatrix rearrange(const StCovariance& m) {
    return RearrangedMatrix(m.dims(), rearrange(m.matrix(), m.dims()));
}

Matrix inverse_rearrange(const Matrix& r, const Dims& dims) {
    require_rearranged_shape(dims, r);
    const int pt = dims.p_t;
    const int ps = dims.p_s;
    Matrix out(pt * ps, pt * ps);
    for (int j = 0; j < pt; ++j) {
        for (int i = 0; i < pt; ++i) {
            const int row = j * pt + i;
            for (int l = 0; l < ps; ++l) {
                for (int k = 0; k < ps; ++k) {
                    out(i * ps + k, j * ps + l) = r(row, l * ps + k);
                }
            }
        }
    }
    return out;
}

Matrix inverse_rearrange(const RearrangedMatrix& r) {
    return inverse_rearrange(r.matrix(), r.dims());
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

}  // namespace kronshrink
