#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kronshrink/synth.hpp"
#include "kronshrink/toeplitz.hpp"

using namespace kronshrink;
using namespace kronshrink::testing;

TEST_CASE("diag_indices enumerates column-major diagonals") {
    CHECK(diag_indices(3, 0) == std::vector<int>{0, 4, 8});
    CHECK(diag_indices(3, 1) == std::vector<int>{1, 5});
    CHECK(diag_indices(3, -2) == std::vector<int>{6});
    CHECK(diag_indices(1, 0) == std::vector<int>{0});
    for (int j = -3; j <= 3; ++j) {
        CHECK(diag_indices(4, j).size() == static_cast<std::size_t>(4 - std::abs(j)));
    }
    CHECK_THROWS_AS((void)diag_indices(3, 3), kronshrink::range_error);
    CHECK_THROWS_AS((void)diag_indices(3, -5), kronshrink::range_error);
}

TEST_CASE("build_projector carries the diagonal weights") {
    SUBCASE("p_t = 1 is the 1x1 identity") {
        const ToeplitzProjector proj = build_projector(1);
        CHECK(proj.p.rows() == 1);
        CHECK(proj.p.cols() == 1);
        CHECK(proj.p(0, 0) == 1.0);
    }
    SUBCASE("offset-zero row of p_t = 3") {
        const ToeplitzProjector proj = build_projector(3);
        const double c = 1.0 / std::sqrt(3.0);
        for (int i : {0, 4, 8}) {
            CHECK(proj.p(2, i) == doctest::Approx(c).epsilon(1e-15));
        }
        CHECK(proj.p.row(2).cwiseAbs().sum() == doctest::Approx(3 * c).epsilon(1e-12));
    }
    SUBCASE("rows are orthonormal") {
        for (int pt : {1, 2, 3, 5, 8, 13, 20}) {
            const ToeplitzProjector proj = build_projector(pt);
            const Matrix gram = proj.p * proj.p.transpose();
            CHECK((gram - Matrix::Identity(2 * pt - 1, 2 * pt - 1)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("apply_p compresses Kronecker products with Toeplitz factors") {
    const Dims dims(4, 3);
    const Matrix a = ar_covariance(ARSpec{0.6, 1.0, 4});  // Toeplitz temporal factor
    const Matrix b = random_symmetric(3, 21);
    const Matrix r = rearrange(kron(a, b), dims);
    const ToeplitzProjector proj = build_projector(4);
    const Matrix compressed = apply_p(proj, r);

    const Eigen::Map<const Vector> vb(b.data(), 9);
    for (int j = -3; j <= 3; ++j) {
        const int row = 3 + j;
        // Diagonal value of the AR factor at offset j is 0.6^|j|.
        const double v = std::pow(0.6, std::abs(j));
        const Vector expected = std::sqrt(4.0 - std::abs(j)) * v * vb;
        CHECK((compressed.row(row).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }

    CHECK(apply_p(proj, Matrix::Zero(16, 9)).isZero(0.0));
    const Matrix any = random_matrix(16, 9, 22);
    CHECK((proj.p.transpose() * apply_p(proj, any)).norm() <= any.norm() + 1e-12);
    CHECK_THROWS_AS((void)apply_p(proj, Matrix::Zero(15, 9)), dimension_error);
}

TEST_CASE("apply_p_transpose produces Toeplitz temporal structure") {
    const ToeplitzProjector proj = build_projector(3);
    const Dims dims(3, 2);
    const Matrix s = random_matrix(5, 4, 23);

    // P (P^T s) = s by row orthonormality.
    CHECK(rel_error(apply_p(proj, apply_p_transpose(proj, s)), s) <= 1e-14);
    CHECK(apply_p_transpose(proj, Matrix::Zero(5, 4)).isZero(0.0));
    CHECK_THROWS_AS((void)apply_p_transpose(proj, Matrix::Zero(4, 4)), dimension_error);

    const Matrix cov = inverse_rearrange(apply_p_transpose(proj, s), dims);
    CHECK(is_block_toeplitz(cov, dims, 1e-12));
}

TEST_CASE("unit vectors stay unit length through P") {
    const ToeplitzProjector proj = build_projector(6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Vector x = random_matrix(11, 1, 1000 + seed);
        x.normalize();
        CHECK((x.transpose() * proj.p).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("P^T P averages over temporal diagonals") {
    // Block-Toeplitz covariance: P^T P fixes its rearrangement.
    const Dims dims(4, 2);
    const Matrix a = ar_covariance(ARSpec{0.7, 2.0, 4});
    const Matrix b = random_spd_covariance(Dims(1, 2), 24).matrix();
    const Matrix sigma = kron(a, b);
    REQUIRE(is_block_toeplitz(sigma, dims, 1e-12));
    const Matrix r = rearrange(sigma, dims);
    const ToeplitzProjector proj = build_projector(4);
    CHECK((proj.p.transpose() * (proj.p * r) - r).cwiseAbs().maxCoeff() <= 1e-12);
}
