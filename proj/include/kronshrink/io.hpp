#pragma once

#include <filesystem>
#include <string>

#include "kronshrink/rearrange.hpp"
#include "kronshrink/synth.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink {

/// Locale-independent decimal rendering with 17 significant digits
/// (round-trips any double exactly).
[[nodiscard]] std::string format_double(double value);

/// Sidecar descriptor path: same stem with a .json extension.
[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Headerless CSV, one matrix row per line.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
[[nodiscard]] Matrix read_matrix_csv(const std::filesystem::path& path);

/// Covariance CSV plus {"p_t", "p_s"} sidecar descriptor.
void save_covariance(const std::filesystem::path& csv_path, const StCovariance& cov);
[[nodiscard]] StCovariance load_covariance(const std::filesystem::path& csv_path);

/// Sample-set CSV (one sample per row) plus {"p_t", "p_s", "n", "seed"} sidecar.
void save_sample_set(const std::filesystem::path& csv_path, const SampleSet& samples);
[[nodiscard]] SampleSet load_sample_set(const std::filesystem::path& csv_path);

/// True when the sidecar descriptor of csv_path declares a sample set.
[[nodiscard]] bool is_sample_set_file(const std::filesystem::path& csv_path);

}  // namespace kronshrink
