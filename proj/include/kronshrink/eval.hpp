#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/solver.hpp"
#include "kronshrink/synth.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// Per-entry mean squared error ||est - truth||_F^2 / (p_t p_s)^2.
[[nodiscard]] double mse(const StCovariance& est, const StCovariance& truth);

/// Least-squares coefficients predicting the last frame from the first
/// p_t - horizon frames: Sigma_yx * pinv(Sigma_xx), singular values below
/// 1e-10 * sigma_1 treated as zero.
[[nodiscard]] Matrix predictor_coefficients(const StCovariance& sigma, int horizon);

/// Gaussian excess prediction risk of coefficients a_hat over the oracle
/// predictor of `truth`: tr((a_hat - a*) Sigma0_xx (a_hat - a*)^T).
[[nodiscard]] double prediction_loss_from_coeffs(const Matrix& a_hat, const StCovariance& truth,
                                                 int horizon);

/// Excess risk of the predictor formed from `est`, evaluated under `truth`.
[[nodiscard]] double prediction_mse_loss(const StCovariance& est, const StCovariance& truth,
                                         int horizon);

enum class EstimatorKind { Scm, Kron, Sparse, Robust, RobustToeplitz };

/// Benchmark estimator: a solver configuration plus reference regularization
/// levels pinned at n_ref samples. At other sample counts the levels are
/// rescaled with the theorem formulas (nuclear weight by max(alpha^2, alpha),
/// sparse weight by 1/sqrt(n)); n_ref <= 0 keeps them fixed.
struct EstimatorSpec {
    std::string label;
    EstimatorKind kind = EstimatorKind::Scm;
    RegParams lambda_ref;
    long n_ref = 0;
    double t0 = 2.0;
    double eps = 0.25;
    SolverConfig config;
};

[[nodiscard]] RegParams scaled_lambdas(const EstimatorSpec& spec, const Dims& dims, long n);

struct BenchmarkRow {
    std::string estimator;
    long n = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    double mse = 0.0;
    double prediction_loss = 0.0;  // NaN when no horizon was requested
    double wall_time_s = 0.0;
    bool ok = true;
    std::string error;
};

/// Monte Carlo covariance-estimation benchmark. For every (n, replicate) a
/// sample set is drawn from `truth` with seed base_seed combined with
/// (n, replicate) — shared by all estimators — and each estimator is scored
/// by mse and, when horizon >= 1, by the excess prediction risk. Estimator
/// failures are recorded in their row and the run continues.
[[nodiscard]] std::vector<BenchmarkRow> run_benchmark(const StCovariance& truth,
                                                      const std::vector<EstimatorSpec>& estimators,
                                                      const std::vector<long>& n_grid, int reps,
                                                      int horizon, std::uint64_t base_seed);

/// Quantiles of the standardized off-diagonal entries (upper triangle)
/// against standard normal quantiles at k/(K+1). If the entries have zero
/// variance the empirical side is all zeros.
struct QqData {
    std::vector<double> normal_q;
    std::vector<double> empirical_q;
};

[[nodiscard]] QqData qq_data(const StCovariance& scm);

/// Alignment between the low-separation-rank and sparse model subspaces:
/// the four largest singular values of products of projectors onto the
/// subspace pair of theta (from its Kronecker spectrum) and of gamma (from
/// its rearranged support), plus the threshold Lambda and both published
/// bound readings 16/Lambda^2 and 1/(16 Lambda^2).
struct IncoherenceReport {
    double sv_theta_gamma = 0.0;
    double sv_theta_perp_gamma = 0.0;
    double sv_theta_gamma_perp = 0.0;
    double sv_theta_perp_gamma_perp = 0.0;
    double lambda_cap = 0.0;
    double bound_outer = 0.0;  // 16 / Lambda^2
    double bound_inner = 0.0;  // 1 / (16 Lambda^2)
};

/// Guard: refuses problems with p_t^2 p_s^2 > 4096 (dense projectors).
[[nodiscard]] IncoherenceReport incoherence_diagnostic(const StCovariance& theta,
                                                       const StCovariance& gamma,
                                                       const RegParams& params, int r, long s);

struct BootstrapResult {
    double rms_variation = 0.0;
    std::vector<double> deviations;
};

/// Stability of the leading temporal factor under spatial subsampling: fit
/// on seeded random subsets of round(fraction * p_s) spatial coordinates,
/// sign-align each first temporal factor to the full-data one, and report
/// the root mean square deviation (factors are unit Frobenius).
[[nodiscard]] BootstrapResult bootstrap_temporal_factors(const SampleSet& samples, double fraction,
                                                         int reps, const RegParams& params,
                                                         const SolverConfig& config,
                                                         std::uint64_t seed);

}  // namespace kronshrink
