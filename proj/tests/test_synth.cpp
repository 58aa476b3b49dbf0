#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "helpers.hpp"
#include "kronshrink/solver.hpp"
#include "kronshrink/synth.hpp"

using namespace kronshrink;
using namespace kronshrink::testing;

TEST_CASE("ar_covariance evaluates c a^|i-j|") {
    const Matrix m = ar_covariance(ARSpec{0.5, 1.0, 3});
    Matrix expected(3, 3);
    expected << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
    CHECK((m - expected).cwiseAbs().maxCoeff() <= 1e-15);

    CHECK((ar_covariance(ARSpec{0.0, 2.0, 4}) - 2.0 * Matrix::Identity(4, 4)).norm() == 0.0);
    CHECK_THROWS_AS((void)ar_covariance(ARSpec{1.0, 1.0, 3}), argument_error);
    CHECK_THROWS_AS((void)ar_covariance(ARSpec{0.5, -1.0, 3}), argument_error);

    // Toeplitz and positive definite across a parameter grid.
    for (double a : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
        for (int dim : {1, 2, 5, 9}) {
            const Matrix cov = ar_covariance(ARSpec{a, 1.3, dim});
            CHECK(is_block_toeplitz(cov, Dims(dim, 1), 0.0));
            Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("kron_sum_covariance matches term-by-term construction") {
    const Dims dims(10, 50);
    KronSumSpec spec;
    spec.dims = dims;
    spec.terms = {
        {1.0, ARSpec{0.5, 1.0, 10}, ARSpec{0.95, 1.0, 50}},
        {0.5, ARSpec{0.8, 1.0, 10}, ARSpec{0.35, 1.0, 50}},
        {0.3, ARSpec{0.05, 1.0, 10}, ARSpec{0.999, 1.0, 50}},
    };
    const StCovariance sigma = kron_sum_covariance(spec);
    CHECK(sigma.size() == 500);

    // Exactly three nonzero Kronecker spectrum values for generic AR factors.
    const KronSpectrum spectrum = kron_spectrum(sigma);
    int nonzero = 0;
    for (Eigen::Index i = 0; i < spectrum.sigmas.size(); ++i) {
        if (spectrum.sigmas(i) > 1e-10 * spectrum.sigmas(0)) {
            ++nonzero;
        }
    }
    CHECK(nonzero == 3);

    // Single unit-scale term: pure Kronecker product, spectrum rank one.
    KronSumSpec single;
    single.dims = Dims(3, 4);
    single.terms = {{1.0, ARSpec{0.4, 1.0, 3}, ARSpec{0.7, 1.0, 4}}};
    const StCovariance pure = kron_sum_covariance(single);
    CHECK(rel_error(pure.matrix(),
                    kron(ar_covariance(single.terms[0].temporal),
                         ar_covariance(single.terms[0].spatial))) <= 1e-15);
    const KronSpectrum ps = kron_spectrum(pure);
    CHECK(ps.sigmas(0) > 0.0);
    CHECK(ps.sigmas(1) <= 1e-10 * ps.sigmas(0));

    KronSumSpec empty;
    empty.dims = dims;
    CHECK_THROWS_AS((void)kron_sum_covariance(empty), argument_error);
    KronSumSpec mismatched = single;
    mismatched.terms[0].temporal.dim = 5;
    CHECK_THROWS_AS((void)kron_sum_covariance(mismatched), argument_error);
}

TEST_CASE("corrupt with an all-zero spec is the identity") {
    const StCovariance sigma = random_spd_covariance(Dims(3, 4), 50);
    const CorruptionResult out = corrupt(sigma, CorruptionSpec{});
    CHECK(out.corrupted.matrix() == sigma.matrix());
    CHECK(out.gamma0.matrix().isZero(0.0));
    CHECK(out.deleted.empty());
}

TEST_CASE("corrupt diag load only yields gamma0 = d I") {
    const StCovariance sigma = random_spd_covariance(Dims(2, 3), 51);
    CorruptionSpec spec;
    spec.diag_load = 0.75;
    const CorruptionResult out = corrupt(sigma, spec);
    CHECK(rel_error(out.gamma0.matrix(), 0.75 * Matrix::Identity(6, 6)) <= 1e-14);
}

TEST_CASE("corrupt sparse support counts mirrored sites") {
    const StCovariance sigma(Dims(4, 5), 4.0 * Matrix::Identity(20, 20));
    CorruptionSpec spec;
    spec.n_sparse = 5;
    spec.base_magnitude = 0.4;
    spec.decay = 0.9;
    spec.seed = 99;
    const CorruptionResult out = corrupt(sigma, spec);
    CHECK((out.gamma0.matrix().array() != 0.0).count() == 10);
    CHECK(symmetry_gap(out.gamma0.matrix()) == 0.0);
    // Same seed reproduces bit-identically.
    const CorruptionResult again = corrupt(sigma, spec);
    CHECK(again.corrupted.matrix() == out.corrupted.matrix());
}

TEST_CASE("corrupt deletions zero rows and columns and respect the floor") {
    const StCovariance sigma = random_spd_covariance(Dims(3, 4), 52);
    CorruptionSpec spec;
    spec.n_deleted_pairs = 3;
    spec.diag_load = 0.3;
    spec.n_sparse = 6;
    spec.base_magnitude = 1.0;
    spec.decay = 0.95;
    spec.psd_floor = 1e-6;
    spec.seed = 5;
    const CorruptionResult out = corrupt(sigma, spec);
    CHECK(out.deleted.size() == 3);
    for (int v : out.deleted) {
        for (int j = 0; j < 12; ++j) {
            if (j != v) {
                CHECK(out.corrupted.matrix()(v, j) == 0.0);
                CHECK(out.corrupted.matrix()(j, v) == 0.0);
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.corrupted.matrix());
    CHECK(eig.eigenvalues().minCoeff() >= spec.psd_floor - 1e-10);

    CorruptionSpec too_many;
    too_many.n_deleted_pairs = 12;
    CHECK_THROWS_AS((void)corrupt(sigma, too_many), argument_error);
}

TEST_CASE("block-Toeplitz corruption preserves block-Toeplitz structure") {
    const Dims dims(4, 3);
    KronSumSpec spec;
    spec.dims = dims;
    spec.terms = {{1.0, ARSpec{0.6, 1.0, 4}, ARSpec{0.8, 1.0, 3}}};
    const StCovariance sigma = kron_sum_covariance(spec);
    REQUIRE(is_block_toeplitz(sigma.matrix(), dims, 0.0));

    CorruptionSpec cs;
    cs.block_toeplitz = true;
    cs.n_deleted_pairs = 1;
    cs.diag_load = 0.4;
    cs.n_sparse = 4;
    cs.base_magnitude = 0.8;
    cs.decay = 0.97;
    cs.psd_floor = 1e-8;
    cs.seed = 17;
    const CorruptionResult out = corrupt(sigma, cs);
    CHECK(is_block_toeplitz(out.corrupted.matrix(), dims, 1e-12));
    CHECK(is_block_toeplitz(out.gamma0.matrix(), dims, 1e-12));
    CHECK(out.deleted.size() == 4);  // one spatial coordinate across four frames
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.corrupted.matrix());
    CHECK(eig.eigenvalues().minCoeff() >= cs.psd_floor - 1e-10);
}

TEST_CASE("sample_gaussian is seed-deterministic and consistent at scale") {
    const StCovariance eye(Dims(2, 1), Matrix::Identity(2, 2));
    const SampleSet big = sample_gaussian(eye, 100000, 2024);
    const StCovariance scm = sample_covariance(big);
    CHECK(rel_error(scm.matrix(), Matrix::Identity(2, 2)) <= 0.05);

    const SampleSet one = sample_gaussian(eye, 1, 7);
    CHECK(one.data.rows() == 1);

    const SampleSet a = sample_gaussian(eye, 50, 31);
    const SampleSet b = sample_gaussian(eye, 50, 31);
    CHECK(a.data == b.data);

    Matrix indef(2, 2);
    indef << 1.0, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS((void)sample_gaussian(StCovariance(Dims(2, 1), indef), 5, 0), numerical_error);
    CHECK_THROWS_AS((void)sample_gaussian(eye, 0, 0), argument_error);
}

TEST_CASE("sample_covariance matches the two-point case and a brute force") {
    Matrix data(2, 2);
    data << 1, 0, -1, 0;
    const StCovariance scm = sample_covariance(data, Dims(2, 1));
    Matrix expected(2, 2);
    expected << 1, 0, 0, 0;
    CHECK((scm.matrix() - expected).norm() == 0.0);

    // n = 1 collapses to zero after mean removal.
    Matrix single(1, 2);
    single << 3.0, -4.0;
    CHECK(sample_covariance(single, Dims(2, 1)).matrix().isZero(0.0));

    // Brute-force double loop.
    const Matrix x = random_matrix(40, 6, 60);
    const StCovariance fast = sample_covariance(x, Dims(2, 3));
    Eigen::RowVectorXd mean = x.colwise().mean();
    Matrix slow = Matrix::Zero(6, 6);
    for (int i = 0; i < 40; ++i) {
        const Eigen::RowVectorXd c = x.row(i) - mean;
        slow += c.transpose() * c;
    }
    slow /= 40.0;
    CHECK(rel_error(fast.matrix(), slow) <= 1e-12);

    // Invariance under adding a constant vector to every sample.
    Matrix shifted = x;
    shifted.rowwise() += Eigen::RowVectorXd::Constant(6, 123.5);
    CHECK(rel_error(sample_covariance(shifted, Dims(2, 3)).matrix(), fast.matrix()) <= 1e-10);
}
