#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/synth.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// Regularization weights: lambda_theta on the rearranged nuclear norm,
/// lambda_gamma on the entrywise 1-norm. Either may be infinite (the
/// corresponding part is pinned to zero), but not both.
struct RegParams {
    double lambda_theta = 0.0;
    double lambda_gamma = 0.0;

    RegParams() = default;
    RegParams(double lt, double lg);
};

struct SolverConfig {
    double tau0 = 0.5;       // initial step size, in (0, 1)
    int max_iter = 500;
    double tol = 1e-8;       // relative Frobenius change of the reconstruction
    double backtrack = 0.5;  // step shrink factor on objective increase
    bool symmetrize = true;

    void validate() const;
};

/// Optional initial iterates; shapes must match the solver's working domain
/// (p_t^2 x p_s^2, or (2 p_t - 1) x p_s^2 for the Toeplitz solver). The
/// gradient-step iterate M is derived from (l, s), not independent state.
struct WarmStart {
    Matrix l;
    Matrix s;
};

struct KktResidual {
    double nuclear = 0.0;
    double sparse = 0.0;
};

struct SolverDiagnostics {
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
    KktResidual kkt;
    int separation_rank = 0;
    long sparse_support = 0;
    double asymmetry = 0.0;  // relative asymmetry of the raw reconstruction
    double wall_time_s = 0.0;
};

/// Fitted decomposition. l_hat/s_hat live in the rearranged domain, or in
/// the projected (2 p_t - 1) x p_s^2 domain for the Toeplitz solver.
struct RobustKronEstimate {
    Dims dims;
    bool toeplitz = false;
    Matrix l_hat;
    Matrix s_hat;
    StCovariance sigma_hat;
    SolverDiagnostics diagnostics;
};

/// Fitting objective ||r - l - s||_F^2 + lambda_theta ||l||_* +
/// lambda_gamma ||s||_1. An infinite weight contributes 0 when its argument
/// is exactly zero and infinity otherwise.
[[nodiscard]] double objective(const Matrix& l, const Matrix& s, const Matrix& r,
                               const RegParams& params);

/// Proximal-gradient fit of the rearranged low-rank plus sparse model to a
/// sample covariance. With M^k = L^k + S^k - tau (L^k + S^k - R) the iterates
///   L^k = svt(M^{k-1} - S^{k-1}, tau lambda_theta / 2),
///   S^k = soft(M^{k-1} - L^{k-1}, tau lambda_gamma / 2)
/// are computed directly from (L, S); the step shrinks whenever the objective
/// would increase, so the recorded trace is nonincreasing. Stops when the
/// relative Frobenius change of the reconstruction drops below tol.
/// Non-convergence at max_iter is reported via diagnostics.converged.
[[nodiscard]] RobustKronEstimate solve_robust_kronpca(const StCovariance& scm,
                                                      const RegParams& params,
                                                      const SolverConfig& config = {},
                                                      const WarmStart* warm = nullptr);

/// Block-Toeplitz variant: works on P * R(scm) with the sparse step
/// row-weighted by c_j, and reconstructs through P^T, so the estimate is
/// block-Toeplitz in time by construction.
[[nodiscard]] RobustKronEstimate solve_toeplitz(const StCovariance& scm, const RegParams& params,
                                                const SolverConfig& config = {},
                                                const WarmStart* warm = nullptr);

/// Kronecker spectrum of a covariance: singular values sigma_i of its
/// rearrangement together with unit-Frobenius factor pairs, so that
/// theta = sum_i sigma_i A_i (x) B_i.
struct KronSpectrum {
    Vector sigmas;
    std::vector<Matrix> temporal_factors;
    std::vector<Matrix> spatial_factors;
};

[[nodiscard]] KronSpectrum kron_spectrum(const StCovariance& theta);

/// Theorem-driven regularization levels:
///   lambda_theta = k ||Sigma_0|| max(alpha^2, alpha),  k = 4 / (1 - 2 eps),
///   lambda_gamma = 32 rho sqrt(log(p_t p_s) / n),
/// with alpha^2 = t0 (p_t^2 + p_s^2 + log M) / n, the p_t^2 replaced by
/// 2 p_t under the Toeplitz flag, and M = max(p_t, p_s, n). Logs are natural.
[[nodiscard]] RegParams theoretic_lambdas(double sigma_norm, double rho, const Dims& dims, long n,
                                          double t0, double eps, bool toeplitz);

/// Optimality certificate for the fitting objective at (l, s). With
/// G = 2 (r - l - s):
///   nuclear = (||G||_2 - lambda_theta)_+ plus the deviation of G from
///             lambda_theta U V^T on the singular span of l,
///   sparse  = (||G||_inf - lambda_gamma)_+ plus the largest deviation of
///             G from lambda_gamma sign(s) on the support of s.
/// Both vanish exactly at the minimizer.
[[nodiscard]] KktResidual kkt_residual(const Matrix& l, const Matrix& s, const Matrix& r,
                                       const RegParams& params);

/// K-fold selection over a grid: each fold scores
/// ||Sigma_hat(train) - SCM(holdout)||_F^2, averaged; ties go to the
/// lexicographically larger (lambda_theta, lambda_gamma). Fold assignment is
/// a seeded shuffle, so the result is deterministic given the seed.
[[nodiscard]] RegParams cross_validate(const SampleSet& samples,
                                       const std::vector<RegParams>& grid, int folds,
                                       bool toeplitz, const SolverConfig& config,
                                       std::uint64_t seed = 0);

}  // namespace kronshrink
