#include "kronshrink/eval.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "kronshrink/rng.hpp"
#include "kronshrink/shrinkage.hpp"

namespace kronshrink {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_horizon(const Dims& dims, int horizon) {
    if (horizon < 1 || horizon > dims.p_t - 1) {
        throw argument_error("horizon must lie in [1, p_t-1], got " + std::to_string(horizon) +
                             " for p_t=" + std::to_string(dims.p_t));
    }
}

Matrix pinv(const Matrix& m) {
    const SvdResult dec = svd(m);
    if (dec.sigma.size() == 0 || dec.sigma(0) <= 0.0) {
        return Matrix::Zero(m.cols(), m.rows());
    }
    const double cutoff = 1e-10 * dec.sigma(0);
    Vector inv = dec.sigma.unaryExpr(
        [cutoff](double x) { return x > cutoff ? 1.0 / x : 0.0; });
    return dec.v * inv.asDiagonal() * dec.u.transpose();
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal-column matrix (d x k, 0 <= k <= d).
Matrix orthonormal_complement(const Matrix& basis, int d) {
    if (basis.cols() == 0) {
        return Matrix::Identity(d, d);
    }
    Eigen::HouseholderQR<Matrix> qr(basis);
    Matrix q = qr.householderQ();
    return q.rightCols(d - basis.cols());
}

double clamp_unit(double x) { return std::min(1.0, std::max(0.0, x)); }

/// sigma_max(P_A P_B) for projectors given by orthonormal bases A, B.
double projector_product_norm(const Matrix& a, const Matrix& b) {
    if (a.cols() == 0 || b.cols() == 0) {
        return 0.0;
    }
    return clamp_unit(spectral_norm(a.transpose() * b));
}

RegParams estimator_params(const EstimatorSpec& spec, const Dims& dims, long n) {
    RegParams base = scaled_lambdas(spec, dims, n);
    switch (spec.kind) {
        case EstimatorKind::Kron:
            return RegParams(base.lambda_theta, std::numeric_limits<double>::infinity());
        case EstimatorKind::Sparse:
            return RegParams(std::numeric_limits<double>::infinity(), base.lambda_gamma);
        default:
            return base;
    }
}

Matrix first_temporal_factor(const Matrix& l_hat, int p_t) {
    if (l_hat.isZero(0.0)) {
        throw numerical_error("bootstrap: fitted low-rank part is zero, no leading factor");
    }
    const SvdResult dec = svd(l_hat);
    return Eigen::Map<const Matrix>(dec.u.col(0).data(), p_t, p_t);
}

}  // namespace

double mse(const StCovariance& est, const StCovariance& truth) {
    if (!(est.dims() == truth.dims())) {
        throw dimension_error("mse: estimates have different dimensions");
    }
    const double d = static_cast<double>(truth.size());
    return (est.matrix() - truth.matrix()).squaredNorm() / (d * d);
}

Matrix predictor_coefficients(const StCovariance& sigma, int horizon) {
    const Dims dims = sigma.dims();
    require_horizon(dims, horizon);
    const int ps = dims.p_s;
    const int nx = (dims.p_t - horizon) * ps;
    const Matrix& m = sigma.matrix();
    const Matrix sigma_yx = m.block((dims.p_t - 1) * ps, 0, ps, nx);
    const Matrix sigma_xx = m.block(0, 0, nx, nx);
    return sigma_yx * pinv(sigma_xx);
}

double prediction_loss_from_coeffs(const Matrix& a_hat, const StCovariance& truth, int horizon) {
    const Dims dims = truth.dims();
    require_horizon(dims, horizon);
    const int nx = (dims.p_t - horizon) * dims.p_s;
    if (a_hat.rows() != dims.p_s || a_hat.cols() != nx) {
        throw dimension_error("prediction loss: coefficient matrix must be " +
                              std::to_string(dims.p_s) + "x" + std::to_string(nx));
    }
    const Matrix a_star = predictor_coefficients(truth, horizon);
    const Matrix diff = a_hat - a_star;
    const Matrix sigma_xx = truth.matrix().block(0, 0, nx, nx);
    return (diff * sigma_xx * diff.transpose()).trace();
}

double prediction_mse_loss(const StCovariance& est, const StCovariance& truth, int horizon) {
    if (!(est.dims() == truth.dims())) {
        throw dimension_error("prediction_mse_loss: dimension mismatch");
    }
    return prediction_loss_from_coeffs(predictor_coefficients(est, horizon), truth, horizon);
}

RegParams scaled_lambdas(const EstimatorSpec& spec, const Dims& dims, long n) {
    if (spec.n_ref <= 0 || spec.n_ref == n) {
        return spec.lambda_ref;
    }
    const bool toep = spec.kind == EstimatorKind::RobustToeplitz;
    auto theta_scale = [&](long samples) {
        const double pt = dims.p_t;
        const double ps = dims.p_s;
        const double big_m = std::max({pt, ps, static_cast<double>(samples)});
        const double dof = (toep ? 2.0 * pt : pt * pt) + ps * ps + std::log(big_m);
        const double alpha = std::sqrt(spec.t0 * dof / static_cast<double>(samples));
        return std::max(alpha * alpha, alpha);
    };
    const double lt = spec.lambda_ref.lambda_theta * theta_scale(n) / theta_scale(spec.n_ref);
    const double lg = spec.lambda_ref.lambda_gamma *
                      std::sqrt(static_cast<double>(spec.n_ref) / static_cast<double>(n));
    return RegParams(lt, lg);
}

std::vector<BenchmarkRow> run_benchmark(const StCovariance& truth,
                                        const std::vector<EstimatorSpec>& estimators,
                                        const std::vector<long>& n_grid, int reps, int horizon,
                                        std::uint64_t base_seed) {
    if (reps < 1) {
        throw argument_error("run_benchmark: reps must be >= 1");
    }
    if (estimators.empty() || n_grid.empty()) {
        throw argument_error("run_benchmark: estimator list and n grid must be nonempty");
    }
    if (horizon >= 1) {
        require_horizon(truth.dims(), horizon);
    }

    std::vector<BenchmarkRow> rows;
    rows.reserve(estimators.size() * n_grid.size() * static_cast<std::size_t>(reps));
    for (long n : n_grid) {
        for (int rep = 0; rep < reps; ++rep) {
            const std::uint64_t seed =
                base_seed ^ hash_combine(static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(rep));
            const SampleSet samples = sample_gaussian(truth, n, seed);
            const StCovariance scm = sample_covariance(samples);
            for (const EstimatorSpec& spec : estimators) {
                BenchmarkRow row;
                row.estimator = spec.label;
                row.n = n;
                row.replicate = rep;
                row.seed = seed;
                const auto start = std::chrono::steady_clock::now();
                try {
                    StCovariance sigma_hat = scm;
                    if (spec.kind != EstimatorKind::Scm) {
                        const RegParams params = estimator_params(spec, truth.dims(), n);
                        const RobustKronEstimate est =
                            spec.kind == EstimatorKind::RobustToeplitz
                                ? solve_toeplitz(scm, params, spec.config)
                                : solve_robust_kronpca(scm, params, spec.config);
                        sigma_hat = est.sigma_hat;
                    }
                    row.mse = mse(sigma_hat, truth);
                    row.prediction_loss =
                        horizon >= 1 ? prediction_mse_loss(sigma_hat, truth, horizon) : kNan;
                } catch (const std::exception& e) {
                    row.ok = false;
                    row.error = e.what();
                    row.mse = kNan;
                    row.prediction_loss = kNan;
                }
                row.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

QqData qq_data(const StCovariance& scm) {
    const int d = scm.size();
    if (d < 2) {
        throw argument_error("qq_data: dimension must be >= 2");
    }
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
    for (int j = 1; j < d; ++j) {
        for (int i = 0; i < j; ++i) {
            entries.push_back(scm.matrix()(i, j));
        }
    }
    const double k = static_cast<double>(entries.size());
    double mean = 0.0;
    for (double v : entries) mean += v;
    mean /= k;
    double var = 0.0;
    for (double v : entries) var += (v - mean) * (v - mean);
    var /= k;
    const double sd = std::sqrt(var);

    QqData out;
    out.normal_q.reserve(entries.size());
    out.empirical_q.reserve(entries.size());
    if (sd > 0.0) {
        for (double& v : entries) {
            v = (v - mean) / sd;
        }
        std::sort(entries.begin(), entries.end());
    } else {
        std::fill(entries.begin(), entries.end(), 0.0);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out.normal_q.push_back(normal_icdf(static_cast<double>(i + 1) / (k + 1.0)));
        out.empirical_q.push_back(entries[i]);
    }
    return out;
}

IncoherenceReport incoherence_diagnostic(const StCovariance& theta, const StCovariance& gamma,
                                         const RegParams& params, int r, long s) {
    if (!(theta.dims() == gamma.dims())) {
        throw dimension_error("incoherence_diagnostic: dimension mismatch");
    }
    const Dims dims = theta.dims();
    const long total = static_cast<long>(dims.p_t) * dims.p_t * dims.p_s * dims.p_s;
    if (total > 4096) {
        throw capability_error("incoherence_diagnostic: p_t^2 p_s^2 = " + std::to_string(total) +
                               " exceeds the dense-projector guard of 4096");
    }
    if (r < 1) {
        throw argument_error("incoherence_diagnostic: rank must be >= 1");
    }
    if (s < 1) {
        throw argument_error("incoherence_diagnostic: support size must be >= 1");
    }

    const KronSpectrum spectrum = kron_spectrum(theta);
    if (r > spectrum.sigmas.size()) {
        throw argument_error("incoherence_diagnostic: rank exceeds the available spectrum");
    }
    const int pt2 = dims.p_t * dims.p_t;
    const int ps2 = dims.p_s * dims.p_s;
    Matrix u_a(pt2, r);
    Matrix u_b(ps2, r);
    for (int i = 0; i < r; ++i) {
        u_a.col(i) = Eigen::Map<const Vector>(spectrum.temporal_factors[i].data(), pt2);
        u_b.col(i) = Eigen::Map<const Vector>(spectrum.spatial_factors[i].data(), ps2);
    }
    const Matrix u_a_perp = orthonormal_complement(u_a, pt2);
    const Matrix u_b_perp = orthonormal_complement(u_b, ps2);

    // Column-major vectorization of L = U_A diag(sigma) U_B^T sends the factor
    // pair (a, b) to b (x) a, so the spatial basis is the left Kronecker factor.
    const Matrix basis_theta_perp = kron(u_b_perp, u_a_perp);
    Matrix basis_theta(static_cast<Eigen::Index>(total),
                       static_cast<Eigen::Index>(total) - basis_theta_perp.cols());
    basis_theta << kron(u_b, u_a), kron(u_b, u_a_perp), kron(u_b_perp, u_a);

    // Support of the vectorized rearranged gamma.
    const Matrix rg = rearrange(gamma.matrix(), dims);
    std::vector<Eigen::Index> support;
    std::vector<Eigen::Index> cosupport;
    for (Eigen::Index j = 0; j < rg.cols(); ++j) {
        for (Eigen::Index i = 0; i < rg.rows(); ++i) {
            const Eigen::Index linear = j * rg.rows() + i;
            if (rg(i, j) != 0.0) {
                support.push_back(linear);
            } else {
                cosupport.push_back(linear);
            }
        }
    }
    if (support.empty()) {
        throw argument_error("incoherence_diagnostic: gamma has empty support");
    }
    auto identity_columns = [total](const std::vector<Eigen::Index>& idx) {
        Matrix out = Matrix::Zero(static_cast<Eigen::Index>(total),
                                  static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            out(idx[c], static_cast<Eigen::Index>(c)) = 1.0;
        }
        return out;
    };
    const Matrix basis_gamma = identity_columns(support);
    const Matrix basis_gamma_perp = identity_columns(cosupport);

    IncoherenceReport report;
    report.sv_theta_gamma = projector_product_norm(basis_theta, basis_gamma);
    report.sv_theta_perp_gamma = projector_product_norm(basis_theta_perp, basis_gamma);
    report.sv_theta_gamma_perp = projector_product_norm(basis_theta, basis_gamma_perp);
    report.sv_theta_perp_gamma_perp = projector_product_norm(basis_theta_perp, basis_gamma_perp);

    const double lt = params.lambda_theta;
    const double lg = params.lambda_gamma;
    const double ratio = 3.0 * lt * std::sqrt(2.0 * r) / (lg * std::sqrt(static_cast<double>(s)));
    const double ratio_inv =
        3.0 * lg * std::sqrt(static_cast<double>(s)) / (lt * std::sqrt(2.0 * r));
    report.lambda_cap = 2.0 + std::max(ratio, ratio_inv);
    report.bound_outer = 16.0 / (report.lambda_cap * report.lambda_cap);
    report.bound_inner = 1.0 / (16.0 * report.lambda_cap * report.lambda_cap);
    return report;
}

BootstrapResult bootstrap_temporal_factors(const SampleSet& samples, double fraction, int reps,
                                           const RegParams& params, const SolverConfig& config,
                                           std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw argument_error("bootstrap: fraction must lie in (0, 1]");
    }
    if (reps < 2) {
        throw argument_error("bootstrap: reps must be >= 2");
    }
    const Dims dims = samples.dims;
    if (static_cast<double>(dims.p_s) * fraction < 2.0) {
        throw argument_error("bootstrap: spatial subset would have fewer than 2 coordinates");
    }
    const int subset_size = static_cast<int>(std::lround(fraction * dims.p_s));

    const StCovariance full_scm = sample_covariance(samples);
    const RobustKronEstimate full_est = solve_robust_kronpca(full_scm, params, config);
    const Matrix a_full = first_temporal_factor(full_est.l_hat, dims.p_t);

    SplitMix64 rng(seed);
    BootstrapResult result;
    result.deviations.reserve(static_cast<std::size_t>(reps));
    double sum_sq = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<int> coords = sample_without_replacement(dims.p_s, subset_size, rng);
        std::sort(coords.begin(), coords.end());

        Matrix reduced(samples.data.rows(), static_cast<Eigen::Index>(coords.size()) * dims.p_t);
        for (int f = 0; f < dims.p_t; ++f) {
            for (std::size_t c = 0; c < coords.size(); ++c) {
                reduced.col(static_cast<Eigen::Index>(f) * static_cast<Eigen::Index>(coords.size()) +
                            static_cast<Eigen::Index>(c)) =
                    samples.data.col(static_cast<Eigen::Index>(f) * dims.p_s + coords[c]);
            }
        }
        const Dims sub_dims(dims.p_t, subset_size);
        const StCovariance sub_scm = sample_covariance(reduced, sub_dims);
        const RobustKronEstimate est = solve_robust_kronpca(sub_scm, params, config);
        Matrix a_rep = first_temporal_factor(est.l_hat, dims.p_t);
        if ((a_rep.array() * a_full.array()).sum() < 0.0) {
            a_rep = -a_rep;
        }
        const double dev = (a_rep - a_full).norm() / a_full.norm();
        result.deviations.push_back(dev);
        sum_sq += dev * dev;
    }
    result.rms_variation = std::sqrt(sum_sq / static_cast<double>(reps));
    return result;
}

}  // namespace kronshrink
