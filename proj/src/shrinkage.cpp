#include "kronshrink/shrinkage.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace kronshrink {

namespace {
void require_nonnegative_lambda(double lambda, const char* who) {
    if (!(lambda >= 0.0)) {
        throw argument_error(std::string(who) + ": threshold must be >= 0, got " +
                             std::to_string(lambda));
    }
}
}  // namespace

int SvdResult::rank(double rel_tol) const {
    if (sigma.size() == 0 || sigma(0) <= 0.0) {
        return 0;
    }
    const double cutoff = rel_tol * sigma(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) {
            ++r;
        }
    }
    return r;
}

SvdResult svd(const Matrix& m) {
    // Two-sided Jacobi throughout. Eigen 3.4.0's BDCSVD misbehaves on
    // matrices with clustered singular values (the typical output of soft
    // singular value thresholding): it can return finite but wrong values,
    // or non-finite factors, while still reporting Success. Jacobi is
    // entirely reliable and fast enough at the dense sizes used here.
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success || !dec.singularValues().allFinite() ||
        !dec.matrixU().allFinite() || !dec.matrixV().allFinite()) {
        throw numerical_error("SVD failed to converge on a " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + " matrix");
    }
    return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

Matrix svt(const Matrix& m, double lambda) {
    require_nonnegative_lambda(lambda, "svt");
    if (lambda == 0.0) {
        return m;
    }
    SvdResult dec = svd(m);
    Vector clipped = (dec.sigma.array() - lambda).max(0.0);
    return dec.u * clipped.asDiagonal() * dec.v.transpose();
}

Matrix soft(const Matrix& m, double lambda) {
    require_nonnegative_lambda(lambda, "soft");
    return m.unaryExpr([lambda](double x) {
        const double mag = std::abs(x) - lambda;
        return mag > 0.0 ? (x > 0.0 ? mag : -mag) : 0.0;
    });
}

Matrix weighted_row_soft(const Matrix& m, double lambda, const Vector& row_weights) {
    require_nonnegative_lambda(lambda, "weighted_row_soft");
    if (row_weights.size() != m.rows()) {
        throw dimension_error("weighted_row_soft: " + std::to_string(m.rows()) +
                              " rows but " + std::to_string(row_weights.size()) + " weights");
    }
    for (Eigen::Index i = 0; i < row_weights.size(); ++i) {
        if (!(row_weights(i) > 0.0)) {
            throw argument_error("weighted_row_soft: weights must be positive");
        }
    }
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out.row(i) = soft(m.row(i), lambda * row_weights(i));
    }
    return out;
}

namespace {
Vector singular_values(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> dec(m);
    if (dec.info() != Eigen::Success || !dec.singularValues().allFinite()) {
        throw numerical_error("SVD failed while computing singular values");
    }
    return dec.singularValues();
}
}  // namespace

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return singular_values(m)(0);
}

double nuclear_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return singular_values(m).sum();
}

}  // namespace kronshrink
