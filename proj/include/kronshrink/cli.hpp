#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "kronshrink/eval.hpp"
#include "kronshrink/synth.hpp"
#include "kronshrink/types.hpp"

namespace kronshrink::cli {

inline constexpr const char* kToolName = "kronshrink";
inline constexpr const char* kVersion = "0.1.0";

/// Canned configurations: "paper-fig1" (synth), "desk-fig4" and "desk-fig3"
/// (benchmark). Unknown names raise argument_error.
[[nodiscard]] nlohmann::json preset(const std::string& name);

/// Ground truth described by a synth/benchmark config: the clean Kronecker
/// sum plus its corrupted version and sparse ground truth.
struct TruthBundle {
    StCovariance clean;
    CorruptionResult corruption;
};

[[nodiscard]] TruthBundle build_truth(const nlohmann::json& config);

/// Benchmark run fully determined by a config (or manifest) JSON.
struct BenchmarkPlan {
    StCovariance truth;
    std::vector<EstimatorSpec> estimators;
    std::vector<long> n_grid;
    int reps = 1;
    int horizon = 0;
    std::uint64_t seed = 0;
};

[[nodiscard]] BenchmarkPlan parse_benchmark_config(const nlohmann::json& config);

/// Command entry points. Each takes a resolved config object (a manifest
/// produced by an earlier run is also accepted), writes its artifacts plus a
/// manifest.json into config["out"], and returns a process exit code.
int cmd_synth(const nlohmann::json& config);
int cmd_estimate(const nlohmann::json& config);
int cmd_benchmark(const nlohmann::json& config);
int cmd_spectra(const nlohmann::json& config);
int cmd_qq(const nlohmann::json& config);
int cmd_incoherence(const nlohmann::json& config);
int cmd_bootstrap(const nlohmann::json& config);

/// Full command line: parses flags, merges preset < config file < flags
/// (flags win), applies the KRONSHRINK_SEED default, dispatches, and maps
/// errors to exit codes (2 usage/config, 3 capability guard).
int run(int argc, const char* const* argv);

}  // namespace kronshrink::cli
