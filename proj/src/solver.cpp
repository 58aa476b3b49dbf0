#include "kronshrink/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "kronshrink/rng.hpp"
#include "kronshrink/shrinkage.hpp"
#include "kronshrink/toeplitz.hpp"

namespace kronshrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTol = 1e-10;  // relative singular value cutoff for rank reports

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw dimension_error(std::string(who) + ": shape mismatch " + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                              "x" + std::to_string(b.cols()));
    }
}

double penalty_term(double lambda, double norm_value, bool arg_is_zero) {
    if (std::isinf(lambda)) {
        return arg_is_zero ? 0.0 : kInf;
    }
    return lambda * norm_value;
}

double weighted_l1(const Matrix& s, const Vector* row_weights) {
    if (row_weights == nullptr) {
        return s.cwiseAbs().sum();
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        total += (*row_weights)(i) * s.row(i).cwiseAbs().sum();
    }
    return total;
}

double objective_impl(const Matrix& l, const Matrix& s, const Matrix& r, const RegParams& params,
                      const Vector* row_weights) {
    require_same_shape(l, r, "objective");
    require_same_shape(s, r, "objective");
    const double fit = (r - l - s).squaredNorm();
    const double nuc =
        penalty_term(params.lambda_theta,
                     std::isinf(params.lambda_theta) ? 0.0 : nuclear_norm(l), l.isZero(0.0));
    const double l1 = penalty_term(params.lambda_gamma,
                                   std::isinf(params.lambda_gamma) ? 0.0 : weighted_l1(s, row_weights),
                                   s.isZero(0.0));
    return fit + nuc + l1;
}

KktResidual kkt_residual_impl(const Matrix& l, const Matrix& s, const Matrix& r,
                              const RegParams& params, const Vector* row_weights) {
    require_same_shape(l, r, "kkt_residual");
    require_same_shape(s, r, "kkt_residual");
    const Matrix g = 2.0 * (r - l - s);
    KktResidual res;

    double nuclear_excess = std::max(0.0, spectral_norm(g) - params.lambda_theta);
    double nuclear_dev = 0.0;
    if (std::isinf(params.lambda_theta)) {
        nuclear_dev = l.isZero(0.0) ? 0.0 : kInf;
    } else if (!l.isZero(0.0)) {
        const SvdResult dec = svd(l);
        const int rank = dec.rank(kRankTol);
        if (rank > 0) {
            const Matrix u1 = dec.u.leftCols(rank);
            const Matrix v1 = dec.v.leftCols(rank);
            Matrix dev = u1.transpose() * g * v1;
            dev.diagonal().array() -= params.lambda_theta;
            nuclear_dev = spectral_norm(dev);
        }
    }
    res.nuclear = nuclear_excess + nuclear_dev;

    double sparse_excess = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double cap = params.lambda_gamma * (row_weights ? (*row_weights)(i) : 1.0);
        sparse_excess = std::max(sparse_excess, g.row(i).cwiseAbs().maxCoeff() - cap);
    }
    sparse_excess = std::max(0.0, sparse_excess);
    double sparse_dev = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            if (s(i, j) != 0.0) {
                const double cap = params.lambda_gamma * (row_weights ? (*row_weights)(i) : 1.0);
                const double want = s(i, j) > 0.0 ? cap : -cap;
                sparse_dev = std::max(sparse_dev, std::abs(g(i, j) - want));
            }
        }
    }
    res.sparse = sparse_excess + sparse_dev;
    return res;
}

struct CoreResult {
    Matrix l;
    Matrix s;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

CoreResult solve_core(const Matrix& r, const RegParams& params, const SolverConfig& config,
                      const Vector* row_weights, const WarmStart* warm) {
    const bool pin_l = std::isinf(params.lambda_theta);
    const bool pin_s = std::isinf(params.lambda_gamma);
    const Matrix zero = Matrix::Zero(r.rows(), r.cols());

    Matrix l = zero;
    Matrix s = zero;
    if (warm != nullptr) {
        require_same_shape(warm->l, r, "warm start");
        require_same_shape(warm->s, r, "warm start");
        l = warm->l;
        s = warm->s;
        if (pin_l) l = zero;
        if (pin_s) s = zero;
    }

    CoreResult out;
    double obj = objective_impl(l, s, r, params, row_weights);
    out.trace.push_back(obj);

    while (out.iterations < config.max_iter) {
        // Gradient of the smooth half-squared fit term at the current point;
        // the M iterate of the algorithm is (l + s) - tau * grad.
        const Matrix grad = l + s - r;
        Matrix lc, sc;
        double objc = 0.0;
        bool accepted = false;
        // The step resets every iteration so a rounding-level objective blip
        // cannot permanently collapse it.
        double tau = config.tau0;
        while (tau >= 1e-14) {
            lc = pin_l ? zero : svt(l - tau * grad, tau * params.lambda_theta / 2.0);
            if (pin_s) {
                sc = zero;
            } else if (row_weights != nullptr) {
                sc = weighted_row_soft(s - tau * grad, tau * params.lambda_gamma / 2.0,
                                       *row_weights);
            } else {
                sc = soft(s - tau * grad, tau * params.lambda_gamma / 2.0);
            }
            if (!lc.allFinite() || !sc.allFinite()) {
                throw numerical_error("solver produced non-finite iterates");
            }
            objc = objective_impl(lc, sc, r, params, row_weights);
            if (objc <= obj) {
                accepted = true;
                break;
            }
            tau *= config.backtrack;
        }
        if (!accepted) {
            break;  // no descent representable at this point; keep the last iterate
        }
        const double prev_norm = (l + s).norm();
        const double change = (lc + sc - l - s).norm();
        l = std::move(lc);
        s = std::move(sc);
        obj = objc;
        out.trace.push_back(obj);
        ++out.iterations;
        const double rel = prev_norm > 0.0 ? change / prev_norm : (change > 0.0 ? kInf : 0.0);
        if (rel < config.tol) {
            out.converged = true;
            break;
        }
    }
    out.l = std::move(l);
    out.s = std::move(s);
    return out;
}

RobustKronEstimate assemble_estimate(const StCovariance& scm, const RegParams& params,
                                     const SolverConfig& config, const WarmStart* warm,
                                     bool toeplitz) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const Dims dims = scm.dims();
    const Matrix r_full = rearrange(scm.matrix(), dims);

    ToeplitzProjector proj;
    Matrix work;
    const Vector* weights = nullptr;
    if (toeplitz) {
        proj = build_projector(dims.p_t);
        work = apply_p(proj, r_full);
        weights = &proj.weights;
    } else {
        work = r_full;
    }

    CoreResult core = solve_core(work, params, config, weights, warm);

    Matrix recon = core.l + core.s;
    Matrix x = inverse_rearrange(toeplitz ? apply_p_transpose(proj, recon) : recon, dims);
    const double asym = symmetry_gap(x);
    if (config.symmetrize) {
        x = 0.5 * (x + x.transpose()).eval();
    }

    RobustKronEstimate est{dims,
                           toeplitz,
                           std::move(core.l),
                           std::move(core.s),
                           StCovariance::unchecked(dims, std::move(x)),
                           SolverDiagnostics{}};
    est.diagnostics.iterations = core.iterations;
    est.diagnostics.converged = core.converged;
    est.diagnostics.objective_trace = std::move(core.trace);
    est.diagnostics.kkt = kkt_residual_impl(est.l_hat, est.s_hat, work, params, weights);
    est.diagnostics.separation_rank = est.l_hat.isZero(0.0) ? 0 : svd(est.l_hat).rank(kRankTol);
    est.diagnostics.sparse_support = (est.s_hat.array() != 0.0).count();
    est.diagnostics.asymmetry = asym;
    est.diagnostics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

}  // namespace

RegParams::RegParams(double lt, double lg) : lambda_theta(lt), lambda_gamma(lg) {
    if (!(lt >= 0.0) || !(lg >= 0.0)) {
        throw argument_error("RegParams: weights must be >= 0");
    }
    if (std::isinf(lt) && std::isinf(lg)) {
        throw argument_error("RegParams: lambda_theta and lambda_gamma cannot both be infinite");
    }
}

void SolverConfig::validate() const {
    if (!(tau0 > 0.0 && tau0 < 1.0)) {
        throw argument_error("SolverConfig: tau0 must lie in (0, 1)");
    }
    if (max_iter < 1) {
        throw argument_error("SolverConfig: max_iter must be >= 1");
    }
    if (!(tol > 0.0)) {
        throw argument_error("SolverConfig: tol must be > 0");
    }
    if (!(backtrack > 0.0 && backtrack < 1.0)) {
        throw argument_error("SolverConfig: backtrack must lie in (0, 1)");
    }
}

double objective(const Matrix& l, const Matrix& s, const Matrix& r, const RegParams& params) {
    return objective_impl(l, s, r, params, nullptr);
}

RobustKronEstimate solve_robust_kronpca(const StCovariance& scm, const RegParams& params,
                                        const SolverConfig& config, const WarmStart* warm) {
    return assemble_estimate(scm, params, config, warm, false);
}

RobustKronEstimate solve_toeplitz(const StCovariance& scm, const RegParams& params,
                                  const SolverConfig& config, const WarmStart* warm) {
    return assemble_estimate(scm, params, config, warm, true);
}

KronSpectrum kron_spectrum(const StCovariance& theta) {
    const Dims dims = theta.dims();
    const SvdResult dec = svd(rearrange(theta.matrix(), dims));
    KronSpectrum spectrum;
    spectrum.sigmas = dec.sigma;
    const auto count = dec.sigma.size();
    spectrum.temporal_factors.reserve(static_cast<std::size_t>(count));
    spectrum.spatial_factors.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        spectrum.temporal_factors.emplace_back(
            Eigen::Map<const Matrix>(dec.u.col(i).data(), dims.p_t, dims.p_t));
        spectrum.spatial_factors.emplace_back(
            Eigen::Map<const Matrix>(dec.v.col(i).data(), dims.p_s, dims.p_s));
    }
    return spectrum;
}

RegParams theoretic_lambdas(double sigma_norm, double rho, const Dims& dims, long n, double t0,
                            double eps, bool toeplitz) {
    if (n < 1) {
        throw argument_error("theoretic_lambdas: n must be >= 1");
    }
    if (!(t0 > 1.0)) {
        throw argument_error("theoretic_lambdas: t0 must be > 1");
    }
    if (!(eps > 0.0 && eps < 0.5)) {
        throw argument_error("theoretic_lambdas: eps must lie in (0, 0.5)");
    }
    if (!(sigma_norm >= 0.0) || !(rho >= 0.0)) {
        throw argument_error("theoretic_lambdas: sigma_norm and rho must be >= 0");
    }
    const double pt = dims.p_t;
    const double ps = dims.p_s;
    const double big_m = std::max({pt, ps, static_cast<double>(n)});
    const double dof = (toeplitz ? 2.0 * pt : pt * pt) + ps * ps + std::log(big_m);
    const double alpha = std::sqrt(t0 * dof / static_cast<double>(n));
    const double k = 4.0 / (1.0 - 2.0 * eps);
    const double lt = k * sigma_norm * std::max(alpha * alpha, alpha);
    const double lg =
        32.0 * rho * std::sqrt(std::log(pt * ps) / static_cast<double>(n));
    return RegParams(lt, lg);
}

KktResidual kkt_residual(const Matrix& l, const Matrix& s, const Matrix& r,
                         const RegParams& params) {
    return kkt_residual_impl(l, s, r, params, nullptr);
}

RegParams cross_validate(const SampleSet& samples, const std::vector<RegParams>& grid, int folds,
                         bool toeplitz, const SolverConfig& config, std::uint64_t seed) {
    if (grid.empty()) {
        throw argument_error("cross_validate: empty grid");
    }
    if (folds < 2) {
        throw argument_error("cross_validate: folds must be >= 2");
    }
    if (samples.n < folds) {
        throw argument_error("cross_validate: need at least one sample per fold");
    }
    const long n = samples.n;
    SplitMix64 rng(seed);
    std::vector<int> perm = sample_without_replacement(static_cast<int>(n), static_cast<int>(n), rng);

    std::vector<double> scores(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        const long lo = f * n / folds;
        const long hi = (f + 1) * n / folds;
        std::vector<int> hold(perm.begin() + lo, perm.begin() + hi);
        std::vector<int> train;
        train.reserve(static_cast<std::size_t>(n - (hi - lo)));
        train.insert(train.end(), perm.begin(), perm.begin() + lo);
        train.insert(train.end(), perm.begin() + hi, perm.end());

        Matrix train_rows(static_cast<Eigen::Index>(train.size()), samples.data.cols());
        for (std::size_t i = 0; i < train.size(); ++i) {
            train_rows.row(static_cast<Eigen::Index>(i)) = samples.data.row(train[i]);
        }
        Matrix hold_rows(static_cast<Eigen::Index>(hold.size()), samples.data.cols());
        for (std::size_t i = 0; i < hold.size(); ++i) {
            hold_rows.row(static_cast<Eigen::Index>(i)) = samples.data.row(hold[i]);
        }
        const StCovariance scm_train = sample_covariance(train_rows, samples.dims);
        const StCovariance scm_hold = sample_covariance(hold_rows, samples.dims);

        for (std::size_t g = 0; g < grid.size(); ++g) {
            const RobustKronEstimate est = toeplitz
                                               ? solve_toeplitz(scm_train, grid[g], config)
                                               : solve_robust_kronpca(scm_train, grid[g], config);
            scores[g] += (est.sigma_hat.matrix() - scm_hold.matrix()).squaredNorm();
        }
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const bool better = scores[g] < scores[best];
        const bool tie_larger =
            scores[g] == scores[best] &&
            (grid[g].lambda_theta > grid[best].lambda_theta ||
             (grid[g].lambda_theta == grid[best].lambda_theta &&
              grid[g].lambda_gamma > grid[best].lambda_gamma));
        if (better || tie_larger) {
            best = g;
        }
    }
    return grid[best];
}

}  // namespace kronshrink
