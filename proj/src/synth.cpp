#include "kronshrink/synth.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <utility>

#include "kronshrink/rng.hpp"

namespace kronshrink {

namespace {

void validate_corruption_spec(const CorruptionSpec& spec) {
    if (spec.n_deleted_pairs < 0 || spec.n_sparse < 0) {
        throw argument_error("corrupt: counts must be >= 0");
    }
    if (!(spec.decay > 0.0 && spec.decay <= 1.0)) {
        throw argument_error("corrupt: decay must lie in (0, 1]");
    }
    if (!(spec.psd_floor >= 0.0)) {
        throw argument_error("corrupt: psd_floor must be >= 0");
    }
    if (!(spec.base_magnitude >= 0.0)) {
        throw argument_error("corrupt: base_magnitude must be >= 0");
    }
}

double signed_magnitude(const CorruptionSpec& spec, int distance, SplitMix64& rng) {
    const double mag = spec.base_magnitude * std::pow(spec.decay, distance);
    return (rng.next() & 1ULL) ? mag : -mag;
}

/// Eigenvalue clipping repair: lift eigenvalues below the floor, restore the
/// exact zero pattern of the deleted rows/columns, re-check. At most three
/// passes before giving up.
void repair_clip(Matrix& m, double floor, const std::vector<int>& deleted) {
    std::vector<bool> is_deleted(static_cast<std::size_t>(m.rows()), false);
    for (int v : deleted) {
        is_deleted[static_cast<std::size_t>(v)] = true;
    }
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
        if (eig.info() != Eigen::Success) {
            throw numerical_error("corrupt: eigendecomposition failed during PSD repair");
        }
        if (eig.eigenvalues().minCoeff() >= floor - 1e-10) {
            return;
        }
        Vector lifted = eig.eigenvalues().cwiseMax(floor);
        m = eig.eigenvectors() * lifted.asDiagonal() * eig.eigenvectors().transpose();
        m = 0.5 * (m + m.transpose()).eval();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (i != j && (is_deleted[static_cast<std::size_t>(i)] ||
                               is_deleted[static_cast<std::size_t>(j)])) {
                    m(i, j) = 0.0;
                }
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.eigenvalues().minCoeff() < floor - 1e-10) {
        throw numerical_error("corrupt: matrix still below the PSD floor after 3 repair passes");
    }
}

/// Structure-preserving repair for the block-Toeplitz mode: a uniform
/// diagonal shift keeps both the Toeplitz blocks and the zero pattern exact.
void repair_shift(Matrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success) {
        throw numerical_error("corrupt: eigendecomposition failed during PSD repair");
    }
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < floor) {
        m.diagonal().array() += floor - min_eig;
    }
}

}  // namespace

Matrix ar_covariance(const ARSpec& spec) {
    if (!(std::abs(spec.a) < 1.0)) {
        throw argument_error("ar_covariance: |a| must be < 1, got " + std::to_string(spec.a));
    }
    if (!(spec.c > 0.0)) {
        throw argument_error("ar_covariance: scale c must be > 0");
    }
    if (spec.dim < 1) {
        throw argument_error("ar_covariance: dim must be >= 1");
    }
    Matrix out(spec.dim, spec.dim);
    for (int i = 0; i < spec.dim; ++i) {
        for (int j = 0; j < spec.dim; ++j) {
            out(i, j) = spec.c * std::pow(spec.a, std::abs(i - j));
        }
    }
    return out;
}

StCovariance kron_sum_covariance(const KronSumSpec& spec) {
    if (spec.terms.empty()) {
        throw argument_error("kron_sum_covariance: at least one term required");
    }
    const int d = spec.dims.total();
    Matrix sum = Matrix::Zero(d, d);
    for (const KronSumTerm& term : spec.terms) {
        if (!(term.scale > 0.0)) {
            throw argument_error("kron_sum_covariance: term scales must be > 0");
        }
        if (term.temporal.dim != spec.dims.p_t || term.spatial.dim != spec.dims.p_s) {
            throw argument_error("kron_sum_covariance: term dimensions disagree with dims");
        }
        sum += term.scale * kron(ar_covariance(term.temporal), ar_covariance(term.spatial));
    }
    return StCovariance(spec.dims, std::move(sum));
}

CorruptionResult corrupt(const StCovariance& sigma, const CorruptionSpec& spec) {
    validate_corruption_spec(spec);
    const Dims dims = sigma.dims();
    const int d = dims.total();
    const int pt = dims.p_t;
    const int ps = dims.p_s;
    if (spec.n_deleted_pairs >= d) {
        throw argument_error("corrupt: cannot delete " + std::to_string(spec.n_deleted_pairs) +
                             " of " + std::to_string(d) + " row/column pairs");
    }
    if (spec.block_toeplitz && spec.n_deleted_pairs >= ps) {
        throw argument_error("corrupt: block-Toeplitz deletion count must be < p_s");
    }
    SplitMix64 rng(spec.seed);

    // Deletions: whole variables, or whole spatial coordinates in BT mode.
    std::vector<int> deleted;
    if (spec.block_toeplitz) {
        std::vector<int> coords = sample_without_replacement(ps, spec.n_deleted_pairs, rng);
        for (int s : coords) {
            for (int f = 0; f < pt; ++f) {
                deleted.push_back(f * ps + s);
            }
        }
    } else {
        deleted = sample_without_replacement(d, spec.n_deleted_pairs, rng);
    }
    std::sort(deleted.begin(), deleted.end());
    std::vector<bool> is_deleted(static_cast<std::size_t>(d), false);
    for (int v : deleted) {
        is_deleted[static_cast<std::size_t>(v)] = true;
    }

    Matrix base = sigma.matrix();
    for (int v : deleted) {
        base.row(v).setZero();
        base.col(v).setZero();
    }

    Matrix corrupted = base;
    corrupted.diagonal().array() += spec.diag_load;

    if (spec.n_sparse > 0 && spec.base_magnitude > 0.0) {
        if (spec.block_toeplitz) {
            // Distinct (lag, in-block site) choices, each value copied to all
            // blocks at that lag and mirrored.
            std::set<std::tuple<int, int, int>> sites;
            long attempts = 0;
            while (static_cast<int>(sites.size()) < spec.n_sparse) {
                if (++attempts > 1000L * spec.n_sparse + 1000L) {
                    throw argument_error("corrupt: unable to place the requested sparse sites");
                }
                const int lag = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(pt)));
                const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(ps)));
                const int l = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(ps)));
                if (is_deleted[static_cast<std::size_t>(k)] ||
                    is_deleted[static_cast<std::size_t>(l)]) {
                    continue;
                }
                if (lag == 0 && k >= l) {
                    continue;
                }
                if (!sites.emplace(lag, k, l).second) {
                    continue;
                }
                const int distance = std::abs(lag * ps + k - l);
                const double value = signed_magnitude(spec, distance, rng);
                for (int f = 0; f + lag < pt; ++f) {
                    const int r = (f + lag) * ps + k;
                    const int c = f * ps + l;
                    corrupted(r, c) += value;
                    corrupted(c, r) += value;
                }
            }
        } else {
            std::set<std::pair<int, int>> sites;
            long attempts = 0;
            while (static_cast<int>(sites.size()) < spec.n_sparse) {
                if (++attempts > 1000L * spec.n_sparse + 1000L) {
                    throw argument_error("corrupt: unable to place the requested sparse sites");
                }
                int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d)));
                int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d)));
                if (i == j || is_deleted[static_cast<std::size_t>(i)] ||
                    is_deleted[static_cast<std::size_t>(j)]) {
                    continue;
                }
                if (i > j) {
                    std::swap(i, j);
                }
                if (!sites.emplace(i, j).second) {
                    continue;
                }
                const double value = signed_magnitude(spec, j - i, rng);
                corrupted(i, j) += value;
                corrupted(j, i) += value;
            }
        }
    }

    if (spec.block_toeplitz) {
        repair_shift(corrupted, spec.psd_floor);
    } else {
        repair_clip(corrupted, spec.psd_floor, deleted);
    }

    Matrix gamma0 = corrupted - base;
    return CorruptionResult{StCovariance::unchecked(dims, std::move(corrupted)),
                            StCovariance::unchecked(dims, std::move(gamma0)), std::move(deleted)};
}

SampleSet sample_gaussian(const StCovariance& sigma, long n, std::uint64_t seed) {
    if (n < 1) {
        throw argument_error("sample_gaussian: n must be >= 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma.matrix());
    if (eig.info() != Eigen::Success) {
        throw numerical_error("sample_gaussian: eigendecomposition failed");
    }
    if (eig.eigenvalues().minCoeff() < -1e-10) {
        throw numerical_error("sample_gaussian: covariance is indefinite (min eigenvalue " +
                              std::to_string(eig.eigenvalues().minCoeff()) + ")");
    }
    Vector clipped = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Matrix root = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();

    const int d = sigma.size();
    Matrix z(n, d);
    for (long s = 0; s < n; ++s) {
        for (int c = 0; c < d; ++c) {
            z(s, c) = normal_icdf(counter_uniform(
                seed, static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(d) +
                          static_cast<std::uint64_t>(c)));
        }
    }
    // root is symmetric, so x_i = root * z_i row-wise is z * root.
    return SampleSet{sigma.dims(), n, z * root, seed};
}

StCovariance sample_covariance(const Matrix& data, const Dims& dims) {
    if (data.rows() < 1) {
        throw argument_error("sample_covariance: need at least one sample");
    }
    if (data.cols() != dims.total()) {
        throw dimension_error("sample_covariance: expected " + std::to_string(dims.total()) +
                              " columns, got " + std::to_string(data.cols()));
    }
    const double n = static_cast<double>(data.rows());
    Eigen::RowVectorXd mean = data.colwise().mean();
    Matrix centered = data.rowwise() - mean;
    Matrix scm = (centered.transpose() * centered) / n;
    scm = 0.5 * (scm + scm.transpose()).eval();
    return StCovariance::unchecked(dims, std::move(scm));
}

StCovariance sample_covariance(const SampleSet& samples) {
    return sample_covariance(samples.data, samples.dims);
}

}  // namespace kronshrink
