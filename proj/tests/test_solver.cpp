#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "kronshrink/shrinkage.hpp"
#include "kronshrink/solver.hpp"
#include "kronshrink/toeplitz.hpp"

using namespace kronshrink;
using namespace kronshrink::testing;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Nuclear norm by an independent route: eigenvalues of M^T M.
double nuclear_by_eig(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m);
    return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

SolverConfig tight_config() {
    SolverConfig cfg;
    cfg.max_iter = 20000;
    cfg.tol = 1e-12;
    return cfg;
}
}  // namespace

TEST_CASE("RegParams and SolverConfig validation") {
    CHECK_THROWS_AS(RegParams(-1.0, 0.0), argument_error);
    CHECK_THROWS_AS(RegParams(kInf, kInf), argument_error);
    CHECK_NOTHROW(RegParams(kInf, 0.0));
    SolverConfig bad;
    bad.tau0 = 1.0;
    CHECK_THROWS_AS(bad.validate(), argument_error);
    bad = SolverConfig{};
    bad.tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), argument_error);
    bad = SolverConfig{};
    bad.backtrack = 1.0;
    CHECK_THROWS_AS(bad.validate(), argument_error);
    bad = SolverConfig{};
    bad.max_iter = 0;
    CHECK_THROWS_AS(bad.validate(), argument_error);
}

TEST_CASE("objective matches its definition") {
    const Matrix zero = Matrix::Zero(4, 4);
    CHECK(objective(zero, zero, zero, RegParams(1.0, 1.0)) == 0.0);

    const Matrix r = random_matrix(4, 4, 70);
    CHECK(objective(r, zero, r, RegParams(0.0, 1.0)) == 0.0);

    const Matrix l = random_matrix(4, 4, 71);
    const Matrix s = random_matrix(4, 4, 72);
    const RegParams params(0.7, 0.3);
    const double expected =
        (r - l - s).squaredNorm() + 0.7 * nuclear_by_eig(l) + 0.3 * s.cwiseAbs().sum();
    CHECK(objective(l, s, r, params) == doctest::Approx(expected).epsilon(1e-10));

    // Infinite weights: zero when the block is exactly zero, infinite otherwise.
    CHECK(objective(zero, s, r, RegParams(kInf, 0.3)) ==
          doctest::Approx((r - s).squaredNorm() + 0.3 * s.cwiseAbs().sum()));
    CHECK(objective(l, s, r, RegParams(kInf, 0.3)) == kInf);
    CHECK_THROWS_AS((void)objective(Matrix::Zero(3, 4), zero, r, RegParams(1, 1)), dimension_error);
}

TEST_CASE("unpenalized solve reproduces the symmetrized input") {
    const StCovariance scm = random_covariance(Dims(3, 3), 73);
    const RobustKronEstimate est = solve_robust_kronpca(scm, RegParams(0.0, 0.0));
    CHECK(est.diagnostics.converged);
    CHECK(rel_error(est.sigma_hat.matrix(), scm.matrix()) <= 1e-10);
    const Matrix r = rearrange(scm.matrix(), scm.dims());
    CHECK(rel_error(est.l_hat + est.s_hat, r) <= 1e-10);
}

TEST_CASE("infinite sparse weight reduces to the SVT closed form") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dims dims(3, 4);
        const StCovariance scm = random_covariance(dims, 7400 + seed);
        const Matrix r = rearrange(scm.matrix(), dims);
        const double lt = 0.4 * spectral_norm(r);
        const RobustKronEstimate est =
            solve_robust_kronpca(scm, RegParams(lt, kInf), tight_config());
        CHECK(est.s_hat.isZero(0.0));
        CHECK(rel_error(est.l_hat, svt(r, lt / 2.0)) <= 1e-6);

        // With no sparse part, the fitted covariance has at most rank(l_hat)
        // nonzero Kronecker spectrum values.
        const KronSpectrum spectrum = kron_spectrum(est.sigma_hat);
        int nonzero = 0;
        for (Eigen::Index i = 0; i < spectrum.sigmas.size(); ++i) {
            if (spectrum.sigmas(i) > 1e-10 * spectrum.sigmas(0)) {
                ++nonzero;
            }
        }
        CHECK(nonzero <= est.diagnostics.separation_rank);
    }
}

TEST_CASE("infinite nuclear weight reduces to the soft closed form") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dims dims(3, 4);
        const StCovariance scm = random_covariance(dims, 7500 + seed);
        const Matrix r = rearrange(scm.matrix(), dims);
        const double lg = 0.8 * r.cwiseAbs().maxCoeff();
        const RobustKronEstimate est =
            solve_robust_kronpca(scm, RegParams(kInf, lg), tight_config());
        CHECK(est.l_hat.isZero(0.0));
        CHECK(rel_error(est.s_hat, soft(r, lg / 2.0)) <= 1e-6);
    }
}

TEST_CASE("objective trace is nonincreasing and the estimate symmetric") {
    const StCovariance scm = random_covariance(Dims(4, 3), 76);
    const Matrix r = rearrange(scm.matrix(), scm.dims());
    const RegParams params(0.2 * spectral_norm(r), 0.2 * r.cwiseAbs().maxCoeff());
    const RobustKronEstimate est = solve_robust_kronpca(scm, params);
    for (std::size_t i = 1; i < est.diagnostics.objective_trace.size(); ++i) {
        CHECK(est.diagnostics.objective_trace[i] <= est.diagnostics.objective_trace[i - 1]);
    }
    CHECK(est.sigma_hat.matrix() == est.sigma_hat.matrix().transpose());
    CHECK(est.diagnostics.asymmetry <= 1e-8);

    // Separation rank of the fitted covariance never exceeds rank(l_hat).
    const KronSpectrum spectrum = kron_spectrum(est.sigma_hat);
    int nonzero = 0;
    for (Eigen::Index i = 0; i < spectrum.sigmas.size(); ++i) {
        if (spectrum.sigmas(i) > 1e-10 * spectrum.sigmas(0)) {
            ++nonzero;
        }
    }
    const int rank_l = est.diagnostics.separation_rank;
    const long support = est.diagnostics.sparse_support;
    CHECK(nonzero <= rank_l + static_cast<int>(std::min<long>(support, spectrum.sigmas.size())));
}

TEST_CASE("two random warm starts reach the same minimizer") {
    const Dims dims(3, 3);
    const StCovariance scm = random_covariance(dims, 77);
    const Matrix r = rearrange(scm.matrix(), dims);
    const RegParams params(0.3 * spectral_norm(r), 0.3 * r.cwiseAbs().maxCoeff());

    WarmStart w1{0.5 * random_matrix(9, 9, 771), 0.5 * random_matrix(9, 9, 772)};
    WarmStart w2{0.5 * random_matrix(9, 9, 774), 0.5 * random_matrix(9, 9, 775)};
    const RobustKronEstimate a = solve_robust_kronpca(scm, params, tight_config(), &w1);
    const RobustKronEstimate b = solve_robust_kronpca(scm, params, tight_config(), &w2);
    CHECK(rel_error(a.sigma_hat.matrix(), b.sigma_hat.matrix()) <= 1e-6);
}

TEST_CASE("toeplitz solve projects onto block-Toeplitz structure") {
    SUBCASE("zero penalties give diagonal-block averaging") {
        const Dims dims(3, 2);
        const StCovariance scm = random_covariance(dims, 78);
        const RobustKronEstimate est = solve_toeplitz(scm, RegParams(0.0, 0.0));
        CHECK(est.toeplitz);
        // Oracle: P^T P applied to the rearranged covariance.
        const ToeplitzProjector proj = build_projector(3);
        const Matrix r = rearrange(scm.matrix(), dims);
        Matrix expected = inverse_rearrange(Matrix(proj.p.transpose() * (proj.p * r)), dims);
        expected = 0.5 * (expected + expected.transpose()).eval();
        CHECK(rel_error(est.sigma_hat.matrix(), expected) <= 1e-8);
        CHECK(is_block_toeplitz(est.sigma_hat.matrix(), dims, 1e-10));
    }
    SUBCASE("kron truth with Toeplitz temporal factor stays separation rank one") {
        const Dims dims(4, 3);
        KronSumSpec spec;
        spec.dims = dims;
        spec.terms = {{1.0, ARSpec{0.6, 1.0, 4}, ARSpec{0.5, 1.0, 3}}};
        const StCovariance sigma = kron_sum_covariance(spec);
        const Matrix rt = apply_p(build_projector(4), rearrange(sigma.matrix(), dims));
        const RegParams params(0.2 * spectral_norm(rt), 0.2 * rt.cwiseAbs().maxCoeff());
        const RobustKronEstimate est = solve_toeplitz(sigma, params, tight_config());
        CHECK(is_block_toeplitz(est.sigma_hat.matrix(), dims, 1e-10));
        CHECK(est.diagnostics.separation_rank == 1);
    }
    SUBCASE("p_t = 1 matches the plain solver") {
        const Dims dims(1, 5);
        const StCovariance scm = random_covariance(dims, 79);
        const Matrix r = rearrange(scm.matrix(), dims);
        const RegParams params(0.3 * spectral_norm(r), 0.3 * r.cwiseAbs().maxCoeff());
        const RobustKronEstimate plain = solve_robust_kronpca(scm, params);
        const RobustKronEstimate toep = solve_toeplitz(scm, params);
        CHECK(rel_error(toep.sigma_hat.matrix(), plain.sigma_hat.matrix()) <= 1e-10);
    }
}

TEST_CASE("kron_spectrum extracts unit-Frobenius factors") {
    SUBCASE("scaled normalized Kronecker product") {
        Matrix a = random_symmetric(3, 80);
        Matrix b = random_symmetric(4, 81);
        a /= a.norm();
        b /= b.norm();
        const StCovariance theta(Dims(3, 4), 2.0 * kron(a, b));
        const KronSpectrum spectrum = kron_spectrum(theta);
        CHECK(spectrum.sigmas(0) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(spectrum.sigmas(1) <= 1e-10);
        CHECK(spectrum.temporal_factors[0].norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(spectrum.spatial_factors[0].norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("identity covariance") {
        const Dims dims(3, 5);
        const StCovariance eye(dims, Matrix::Identity(15, 15));
        const KronSpectrum spectrum = kron_spectrum(eye);
        CHECK(spectrum.sigmas(0) == doctest::Approx(std::sqrt(15.0)).epsilon(1e-12));
        CHECK(spectrum.sigmas(1) <= 1e-12);
    }
    SUBCASE("reconstruction on random symmetric input") {
        const Dims dims(3, 4);
        const StCovariance theta = random_covariance(dims, 82);
        const KronSpectrum spectrum = kron_spectrum(theta);
        Matrix rebuilt = Matrix::Zero(12, 12);
        for (Eigen::Index i = 0; i < spectrum.sigmas.size(); ++i) {
            rebuilt += spectrum.sigmas(i) *
                       kron(spectrum.temporal_factors[static_cast<std::size_t>(i)],
                            spectrum.spatial_factors[static_cast<std::size_t>(i)]);
        }
        CHECK(rel_error(rebuilt, theta.matrix()) <= 1e-8);
    }
}

TEST_CASE("theoretic_lambdas evaluates the published formulas") {
    // rho = 1, p_t p_s = 100, n = 1000.
    const RegParams p = theoretic_lambdas(1.0, 1.0, Dims(10, 10), 1000, 2.0, 0.25, false);
    CHECK(p.lambda_gamma == doctest::Approx(2.1715).epsilon(1e-3));
    CHECK(p.lambda_gamma ==
          doctest::Approx(32.0 * std::sqrt(std::log(100.0) / 1000.0)).epsilon(1e-12));

    // k = 4 / (1 - 2 eps): eps = 0.25 gives 8.
    const double alpha = std::sqrt(2.0 * (100.0 + 100.0 + std::log(1000.0)) / 1000.0);
    CHECK(p.lambda_theta ==
          doctest::Approx(8.0 * std::max(alpha * alpha, alpha)).epsilon(1e-12));

    // Toeplitz alpha is strictly smaller for p_t >= 3.
    for (int pt : {3, 5, 10}) {
        const Dims dims(pt, 7);
        const RegParams plain = theoretic_lambdas(1.0, 1.0, dims, 500, 2.0, 0.1, false);
        const RegParams toep = theoretic_lambdas(1.0, 1.0, dims, 500, 2.0, 0.1, true);
        CHECK(toep.lambda_theta < plain.lambda_theta);
        CHECK(toep.lambda_gamma == plain.lambda_gamma);
    }

    CHECK_THROWS_AS((void)theoretic_lambdas(1, 1, Dims(2, 2), 0, 2.0, 0.25, false),
                    argument_error);
    CHECK_THROWS_AS((void)theoretic_lambdas(1, 1, Dims(2, 2), 10, 1.0, 0.25, false),
                    argument_error);
    CHECK_THROWS_AS((void)theoretic_lambdas(1, 1, Dims(2, 2), 10, 2.0, 0.5, false),
                    argument_error);
}

TEST_CASE("kkt_residual certifies closed-form optima") {
    const Dims dims(3, 3);
    const StCovariance scm = random_covariance(dims, 83);
    const Matrix r = rearrange(scm.matrix(), dims);

    SUBCASE("svt closed form under infinite sparse weight") {
        const double lt = 0.5 * spectral_norm(r);
        const Matrix l = svt(r, lt / 2.0);
        const KktResidual res = kkt_residual(l, Matrix::Zero(9, 9), r, RegParams(lt, kInf));
        CHECK(res.nuclear <= 1e-6);
        CHECK(res.sparse == 0.0);
    }
    SUBCASE("zero is optimal under huge penalties") {
        const double big = 2.0 * r.norm() + 1.0;
        const KktResidual res =
            kkt_residual(Matrix::Zero(9, 9), Matrix::Zero(9, 9), r, RegParams(big, big));
        CHECK(res.nuclear == 0.0);
        CHECK(res.sparse == 0.0);
    }
    SUBCASE("solver output satisfies the certificate") {
        const RegParams params(0.3 * spectral_norm(r), 0.3 * r.cwiseAbs().maxCoeff());
        const RobustKronEstimate est = solve_robust_kronpca(scm, params, tight_config());
        const KktResidual res = kkt_residual(est.l_hat, est.s_hat, r, params);
        CHECK(res.nuclear <= 1e-5);
        CHECK(res.sparse <= 1e-5);
    }
}

TEST_CASE("cross_validate picks sensible grid points deterministically") {
    const Dims dims(2, 3);
    KronSumSpec spec;
    spec.dims = dims;
    spec.terms = {{1.0, ARSpec{0.5, 1.0, 2}, ARSpec{0.6, 1.0, 3}}};
    const StCovariance truth = kron_sum_covariance(spec);
    const SampleSet samples = sample_gaussian(truth, 60, 314);

    SUBCASE("singleton grid") {
        const std::vector<RegParams> grid{RegParams(0.1, 0.1)};
        const RegParams pick = cross_validate(samples, grid, 3, false, SolverConfig{}, 1);
        CHECK(pick.lambda_theta == 0.1);
        CHECK(pick.lambda_gamma == 0.1);
    }
    SUBCASE("low penalty beats estimate-crushing penalty") {
        const double huge = 1e6;
        const std::vector<RegParams> grid{RegParams(0.0, kInf), RegParams(huge, huge)};
        const RegParams pick = cross_validate(samples, grid, 3, false, SolverConfig{}, 1);
        CHECK(pick.lambda_theta == 0.0);
    }
    SUBCASE("deterministic in the fold seed") {
        const std::vector<RegParams> grid{RegParams(0.05, 0.05), RegParams(0.2, 0.2),
                                          RegParams(0.8, 0.8)};
        const RegParams a = cross_validate(samples, grid, 4, false, SolverConfig{}, 9);
        const RegParams b = cross_validate(samples, grid, 4, false, SolverConfig{}, 9);
        CHECK(a.lambda_theta == b.lambda_theta);
        CHECK(a.lambda_gamma == b.lambda_gamma);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS((void)cross_validate(samples, {}, 3, false, SolverConfig{}, 0),
                        argument_error);
        const std::vector<RegParams> grid{RegParams(0.1, 0.1)};
        CHECK_THROWS_AS((void)cross_validate(samples, grid, 61, false, SolverConfig{}, 0),
                        argument_error);
    }
}

TEST_CASE("non-convergence is flagged rather than thrown") {
    const StCovariance scm = random_covariance(Dims(3, 3), 88);
    SolverConfig cfg;
    cfg.max_iter = 2;
    cfg.tol = 1e-16;
    const Matrix r = rearrange(scm.matrix(), scm.dims());
    const RobustKronEstimate est =
        solve_robust_kronpca(scm, RegParams(0.4 * spectral_norm(r), 0.1), cfg);
    CHECK_FALSE(est.diagnostics.converged);
    CHECK(est.diagnostics.iterations == 2);
}
