#include "kronshrink/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "kronshrink/io.hpp"
#include "kronshrink/rng.hpp"
#include "kronshrink/shrinkage.hpp"
#include "kronshrink/solver.hpp"

namespace kronshrink::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_lambda_value(const json& v, const std::string& name) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (s == "inf" || s == "+inf" || s == "infinity") {
            return kInf;
        }
        try {
            std::size_t used = 0;
            const double value = std::stod(s, &used);
            if (used == s.size()) {
                return value;
            }
        } catch (const std::exception&) {
        }
    }
    throw argument_error("cannot read " + name + " as a number or \"inf\"");
}

json lambda_to_json(double value) {
    if (std::isinf(value)) {
        return json("inf");
    }
    return json(value);
}

json read_json_path(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw argument_error("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw argument_error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

/// Accept either a plain config or a manifest from an earlier run.
json unwrap_manifest(json j) {
    if (j.is_object() && j.contains("config") && j.contains("command")) {
        return j.at("config");
    }
    return j;
}

fs::path require_out_dir(const json& config) {
    if (!config.contains("out")) {
        throw argument_error("an output directory is required (--out or config \"out\")");
    }
    fs::path out(config.at("out").get<std::string>());
    fs::create_directories(out);
    return out;
}

std::uint64_t config_seed(const json& config) {
    return config.value("seed", std::uint64_t{0});
}

void write_manifest(const fs::path& out, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs, json extra = json::object()) {
    ordered_json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kVersion;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["outputs"] = outputs;
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        manifest[it.key()] = it.value();
    }
    std::ofstream file(out / "manifest.json", std::ios::trunc);
    if (!file) {
        throw argument_error("cannot write " + (out / "manifest.json").string());
    }
    file << manifest.dump(2) << "\n";
}

SolverConfig solver_config_from(const json& config) {
    SolverConfig cfg;
    if (config.contains("solver")) {
        const json& s = config.at("solver");
        cfg.tau0 = s.value("tau0", cfg.tau0);
        cfg.max_iter = s.value("max_iter", cfg.max_iter);
        cfg.tol = s.value("tol", cfg.tol);
        cfg.backtrack = s.value("backtrack", cfg.backtrack);
        cfg.symmetrize = s.value("symmetrize", cfg.symmetrize);
    }
    cfg.validate();
    return cfg;
}

CorruptionSpec corruption_from(const json& config) {
    CorruptionSpec spec;
    spec.seed = config_seed(config);
    if (config.contains("corruption")) {
        const json& c = config.at("corruption");
        spec.n_deleted_pairs = c.value("n_deleted_pairs", spec.n_deleted_pairs);
        spec.diag_load = c.value("diag_load", spec.diag_load);
        spec.n_sparse = c.value("n_sparse", spec.n_sparse);
        spec.base_magnitude = c.value("base_magnitude", spec.base_magnitude);
        spec.decay = c.value("decay", spec.decay);
        spec.block_toeplitz = c.value("block_toeplitz", spec.block_toeplitz);
        spec.psd_floor = c.value("psd_floor", spec.psd_floor);
        spec.seed = c.value("seed", spec.seed);
    }
    return spec;
}

EstimatorKind parse_kind(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return c == '-' ? '_' : static_cast<char>(std::tolower(c)); });
    if (name == "scm") return EstimatorKind::Scm;
    if (name == "kron") return EstimatorKind::Kron;
    if (name == "sparse") return EstimatorKind::Sparse;
    if (name == "robust") return EstimatorKind::Robust;
    if (name == "robust_toeplitz") return EstimatorKind::RobustToeplitz;
    throw argument_error("unknown estimator kind '" + name + "'");
}

void write_rows_csv(const fs::path& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw argument_error("cannot write " + path.string());
    }
    out << "estimator,n,replicate,mse,prediction_loss,wall_time_s\n";
    for (const BenchmarkRow& row : rows) {
        out << row.estimator << ',' << row.n << ',' << row.replicate << ','
            << format_double(row.mse) << ',' << format_double(row.prediction_loss) << ','
            << format_double(row.wall_time_s) << '\n';
    }
}

void write_two_column_csv(const fs::path& path, const std::string& header,
                          const std::vector<double>& a, const std::vector<double>& b) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw argument_error("cannot write " + path.string());
    }
    out << header << '\n';
    for (std::size_t i = 0; i < a.size(); ++i) {
        out << format_double(a[i]) << ',' << format_double(b[i]) << '\n';
    }
}

struct LambdaChoice {
    RegParams params;
    std::string source;
};

LambdaChoice resolve_lambdas(const json& config, const StCovariance& scm,
                             const SampleSet* samples, long n, bool toeplitz,
                             const SolverConfig& solver_cfg) {
    const std::string mode = config.value("lambda_mode", "explicit");
    const double t0 = config.value("t0", 2.0);
    const double eps = config.value("eps", 0.25);
    LambdaChoice choice;
    if (mode == "explicit") {
        if (!config.contains("lambda_theta") || !config.contains("lambda_gamma")) {
            throw argument_error(
                "explicit mode needs both --lambda-theta and --lambda-gamma "
                "(or --lambda-theory / --lambda-cv)");
        }
        choice.params = RegParams(parse_lambda_value(config.at("lambda_theta"), "lambda_theta"),
                                  parse_lambda_value(config.at("lambda_gamma"), "lambda_gamma"));
        choice.source = "explicit";
        return choice;
    }
    if (mode == "theory") {
        if (n < 1) {
            throw argument_error("--lambda-theory needs a sample count (--n or a sample-set input)");
        }
        // Plug-in: spectral norm and peak variance taken from the input
        // covariance when the true one is unknown.
        const double sigma_norm = spectral_norm(scm.matrix());
        const double rho = scm.matrix().diagonal().maxCoeff();
        choice.params = theoretic_lambdas(sigma_norm, rho, scm.dims(), n, t0, eps, toeplitz);
        choice.source = "theory-plugin";
    } else if (mode == "cv") {
        if (samples == nullptr) {
            throw argument_error("--lambda-cv needs a sample-set input");
        }
        const int folds = config.value("cv_folds", 5);
        std::vector<RegParams> grid;
        if (config.contains("cv_grid")) {
            for (const json& point : config.at("cv_grid")) {
                grid.emplace_back(parse_lambda_value(point.at(0), "cv_grid lambda_theta"),
                                  parse_lambda_value(point.at(1), "cv_grid lambda_gamma"));
            }
        } else {
            const double sigma_norm = spectral_norm(scm.matrix());
            const double rho = scm.matrix().diagonal().maxCoeff();
            const RegParams center =
                theoretic_lambdas(sigma_norm, rho, scm.dims(), samples->n, t0, eps, toeplitz);
            for (double ft : {0.25, 1.0, 4.0}) {
                for (double fg : {0.25, 1.0, 4.0}) {
                    grid.emplace_back(center.lambda_theta * ft, center.lambda_gamma * fg);
                }
            }
        }
        choice.params = cross_validate(*samples, grid, folds, toeplitz, solver_cfg,
                                       config_seed(config));
        choice.source = "cv";
    } else {
        throw argument_error("unknown lambda_mode '" + mode + "'");
    }
    // Explicit values always win over computed ones.
    double lt = choice.params.lambda_theta;
    double lg = choice.params.lambda_gamma;
    if (config.contains("lambda_theta")) {
        lt = parse_lambda_value(config.at("lambda_theta"), "lambda_theta");
        choice.source += "+explicit-theta";
    }
    if (config.contains("lambda_gamma")) {
        lg = parse_lambda_value(config.at("lambda_gamma"), "lambda_gamma");
        choice.source += "+explicit-gamma";
    }
    choice.params = RegParams(lt, lg);
    return choice;
}

}  // namespace

json preset(const std::string& name) {
    if (name == "paper-fig1") {
        return json{
            {"dims", {{"p_t", 10}, {"p_s", 50}}},
            {"terms",
             {{{"scale", 1.0}, {"temporal_a", 0.5}, {"spatial_a", 0.95}},
              {{"scale", 0.5}, {"temporal_a", 0.8}, {"spatial_a", 0.35}},
              {{"scale", 0.3}, {"temporal_a", 0.05}, {"spatial_a", 0.999}}}},
            {"corruption",
             {{"n_deleted_pairs", 5},
              {"diag_load", 0.5},
              {"n_sparse", 50},
              {"base_magnitude", 1.0},
              {"decay", 0.99},
              {"block_toeplitz", false},
              {"psd_floor", 1e-6},
              {"seed", 7}}},
            {"samples_n", 0},
            {"seed", 1}};
    }
    if (name == "desk-fig4" || name == "desk-fig3") {
        const bool toeplitz = name == "desk-fig3";
        json cfg{
            {"dims", {{"p_t", 6}, {"p_s", 12}}},
            {"terms",
             {{{"scale", 1.0}, {"temporal_a", 0.5}, {"spatial_a", 0.95}},
              {{"scale", 0.5}, {"temporal_a", 0.8}, {"spatial_a", 0.35}}}},
            {"corruption",
             {{"diag_load", 0.5},
              {"n_sparse", 20},
              {"base_magnitude", 1.5},
              {"decay", 0.98},
              {"block_toeplitz", toeplitz},
              {"psd_floor", 1e-6},
              {"seed", 7}}},
            {"replicates", 20},
            {"horizon", 3},
            {"seed", 20140901},
            {"solver", {{"max_iter", 2000}, {"tol", 1e-9}}}};
        // Reference levels live at n_ref = 10^4 and are rescaled to other
        // sample counts with the theorem formulas.
        const json kron_est = {{"label", "kron"},   {"kind", "kron"},
                               {"lambda_theta_ref", 0.4}, {"n_ref", 10000}};
        const json robust_est = {{"label", "robust"},        {"kind", "robust"},
                                 {"lambda_theta_ref", 0.4},  {"lambda_gamma_ref", 0.06},
                                 {"n_ref", 10000}};
        if (toeplitz) {
            cfg["n_grid"] = {100};
            cfg["estimators"] = json::array(
                {{{"label", "scm"}, {"kind", "scm"}},
                 kron_est,
                 robust_est,
                 {{"label", "robust-toeplitz"},
                  {"kind", "robust_toeplitz"},
                  {"lambda_theta_ref", 0.4},
                  {"lambda_gamma_ref", 0.06},
                  {"n_ref", 10000}}});
        } else {
            cfg["n_grid"] = {100, 1000, 10000};
            cfg["estimators"] =
                json::array({{{"label", "scm"}, {"kind", "scm"}}, kron_est, robust_est});
        }
        return cfg;
    }
    throw argument_error("unknown preset '" + name + "'");
}

TruthBundle build_truth(const json& config) {
    if (!config.contains("dims") || !config.contains("terms")) {
        throw argument_error("config needs \"dims\" and \"terms\" to build a ground truth");
    }
    const json& d = config.at("dims");
    const Dims dims(d.at("p_t").get<int>(), d.at("p_s").get<int>());
    KronSumSpec spec;
    spec.dims = dims;
    for (const json& term : config.at("terms")) {
        KronSumTerm t;
        t.scale = term.value("scale", 1.0);
        t.temporal = ARSpec{term.at("temporal_a").get<double>(), term.value("temporal_c", 1.0),
                            dims.p_t};
        t.spatial = ARSpec{term.at("spatial_a").get<double>(), term.value("spatial_c", 1.0),
                           dims.p_s};
        spec.terms.push_back(t);
    }
    StCovariance clean = kron_sum_covariance(spec);
    CorruptionResult corruption = corrupt(clean, corruption_from(config));
    return TruthBundle{std::move(clean), std::move(corruption)};
}

BenchmarkPlan parse_benchmark_config(const json& raw) {
    const json config = unwrap_manifest(raw);
    TruthBundle truth = build_truth(config);
    const SolverConfig solver_cfg = solver_config_from(config);

    if (!config.contains("estimators") || !config.at("estimators").is_array() ||
        config.at("estimators").empty()) {
        throw argument_error("benchmark config needs a nonempty \"estimators\" array");
    }
    std::vector<EstimatorSpec> estimators;
    for (const json& e : config.at("estimators")) {
        EstimatorSpec spec;
        spec.label = e.at("label").get<std::string>();
        spec.kind = parse_kind(e.value("kind", spec.label));
        const double lt = e.contains("lambda_theta_ref")
                              ? parse_lambda_value(e.at("lambda_theta_ref"), "lambda_theta_ref")
                              : 0.0;
        const double lg = e.contains("lambda_gamma_ref")
                              ? parse_lambda_value(e.at("lambda_gamma_ref"), "lambda_gamma_ref")
                              : 0.0;
        spec.lambda_ref = RegParams(lt, lg);
        spec.n_ref = e.value("n_ref", 0L);
        spec.t0 = e.value("t0", 2.0);
        spec.eps = e.value("eps", 0.25);
        spec.config = solver_cfg;
        estimators.push_back(std::move(spec));
    }

    if (!config.contains("n_grid") || !config.at("n_grid").is_array() ||
        config.at("n_grid").empty()) {
        throw argument_error("benchmark config needs a nonempty \"n_grid\" array");
    }
    std::vector<long> n_grid;
    for (const json& n : config.at("n_grid")) {
        n_grid.push_back(n.get<long>());
    }

    return BenchmarkPlan{std::move(truth.corruption.corrupted), std::move(estimators),
                         std::move(n_grid), config.value("replicates", 1),
                         config.value("horizon", 0), config_seed(config)};
}

int cmd_synth(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    TruthBundle truth = build_truth(config);

    save_covariance(out / "truth.csv", truth.clean);
    save_covariance(out / "corrupted.csv", truth.corruption.corrupted);
    save_covariance(out / "gamma0.csv", truth.corruption.gamma0);
    std::vector<std::string> outputs{"truth.csv", "corrupted.csv", "gamma0.csv"};

    const long samples_n = config.value("samples_n", 0L);
    if (samples_n > 0) {
        const SampleSet samples =
            sample_gaussian(truth.corruption.corrupted, samples_n, config_seed(config));
        save_sample_set(out / "samples.csv", samples);
        outputs.push_back("samples.csv");
    }
    json extra;
    extra["deleted_variables"] = truth.corruption.deleted;
    write_manifest(out, "synth", config, outputs, extra);
    return 0;
}

int cmd_estimate(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    if (!config.contains("input")) {
        throw argument_error("estimate needs an --input covariance or sample set");
    }
    const fs::path input(config.at("input").get<std::string>());

    std::optional<SampleSet> samples;
    long n = config.value("n", 0L);
    StCovariance scm = [&]() {
        if (is_sample_set_file(input)) {
            samples = load_sample_set(input);
            n = samples->n;
            return sample_covariance(*samples);
        }
        return load_covariance(input);
    }();

    const bool toeplitz = config.value("toeplitz", false);
    const SolverConfig solver_cfg = solver_config_from(config);
    const LambdaChoice choice =
        resolve_lambdas(config, scm, samples ? &*samples : nullptr, n, toeplitz, solver_cfg);

    const RobustKronEstimate est = toeplitz ? solve_toeplitz(scm, choice.params, solver_cfg)
                                            : solve_robust_kronpca(scm, choice.params, solver_cfg);

    save_covariance(out / "sigma_hat.csv", est.sigma_hat);
    write_matrix_csv(out / "l_hat.csv", est.l_hat);
    write_matrix_csv(out / "s_hat.csv", est.s_hat);

    ordered_json diag;
    diag["lambda_theta"] = lambda_to_json(choice.params.lambda_theta);
    diag["lambda_gamma"] = lambda_to_json(choice.params.lambda_gamma);
    diag["lambda_source"] = choice.source;
    diag["toeplitz"] = toeplitz;
    diag["iterations"] = est.diagnostics.iterations;
    diag["converged"] = est.diagnostics.converged;
    diag["separation_rank"] = est.diagnostics.separation_rank;
    diag["sparse_support"] = est.diagnostics.sparse_support;
    diag["kkt_nuclear"] = est.diagnostics.kkt.nuclear;
    diag["kkt_sparse"] = est.diagnostics.kkt.sparse;
    diag["asymmetry"] = est.diagnostics.asymmetry;
    diag["objective_trace"] = est.diagnostics.objective_trace;
    diag["wall_time_s"] = est.diagnostics.wall_time_s;
    std::ofstream diag_file(out / "diagnostics.json", std::ios::trunc);
    diag_file << diag.dump(2) << "\n";

    write_manifest(out, "estimate", config,
                   {"sigma_hat.csv", "l_hat.csv", "s_hat.csv", "diagnostics.json"});
    if (!est.diagnostics.converged) {
        std::cerr << "warning: solver did not converge within max_iter; "
                     "see diagnostics.json\n";
    }
    return 0;
}

int cmd_benchmark(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    const BenchmarkPlan plan = parse_benchmark_config(config);

    std::vector<BenchmarkRow> rows = run_benchmark(plan.truth, plan.estimators, plan.n_grid,
                                                   plan.reps, plan.horizon, plan.seed);
    std::sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        if (a.n != b.n) return a.n < b.n;
        return a.replicate < b.replicate;
    });
    write_rows_csv(out / "benchmark.csv", rows);

    json failures = json::array();
    for (const BenchmarkRow& row : rows) {
        if (!row.ok) {
            failures.push_back({{"estimator", row.estimator},
                                {"n", row.n},
                                {"replicate", row.replicate},
                                {"error", row.error}});
        }
    }
    json extra;
    extra["failures"] = failures;
    write_manifest(out, "benchmark", config, {"benchmark.csv"}, extra);
    return 0;
}

int cmd_spectra(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    if (!config.contains("input")) {
        throw argument_error("spectra needs an --input covariance");
    }
    const StCovariance cov = load_covariance(config.at("input").get<std::string>());

    const KronSpectrum spectrum = kron_spectrum(cov);
    std::vector<double> idx(static_cast<std::size_t>(spectrum.sigmas.size()));
    std::vector<double> sig(static_cast<std::size_t>(spectrum.sigmas.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<double>(i + 1);
        sig[i] = spectrum.sigmas(static_cast<Eigen::Index>(i));
    }
    write_two_column_csv(out / "kron_spectrum.csv", "index,sigma", idx, sig);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov.matrix());
    if (eig.info() != Eigen::Success) {
        throw numerical_error("eigendecomposition failed");
    }
    std::vector<double> eidx(static_cast<std::size_t>(cov.size()));
    std::vector<double> evals(static_cast<std::size_t>(cov.size()));
    for (std::size_t i = 0; i < evals.size(); ++i) {
        eidx[i] = static_cast<double>(i + 1);
        evals[i] = eig.eigenvalues()(static_cast<Eigen::Index>(evals.size() - 1 - i));
    }
    write_two_column_csv(out / "pca_spectrum.csv", "index,eigenvalue", eidx, evals);

    write_manifest(out, "spectra", config, {"kron_spectrum.csv", "pca_spectrum.csv"});
    return 0;
}

int cmd_qq(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    if (!config.contains("input")) {
        throw argument_error("qq needs an --input covariance");
    }
    const StCovariance cov = load_covariance(config.at("input").get<std::string>());
    const QqData data = qq_data(cov);
    write_two_column_csv(out / "qq.csv", "normal_quantile,empirical_quantile", data.normal_q,
                         data.empirical_q);
    write_manifest(out, "qq", config, {"qq.csv"});
    return 0;
}

int cmd_incoherence(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    if (!config.contains("theta") || !config.contains("gamma")) {
        throw argument_error("incoherence needs --theta and --gamma covariance inputs");
    }
    const StCovariance theta = load_covariance(config.at("theta").get<std::string>());
    const StCovariance gamma = load_covariance(config.at("gamma").get<std::string>());
    const RegParams params(
        config.contains("lambda_theta") ? parse_lambda_value(config.at("lambda_theta"), "lambda_theta")
                                        : 1.0,
        config.contains("lambda_gamma") ? parse_lambda_value(config.at("lambda_gamma"), "lambda_gamma")
                                        : 1.0);

    int rank = config.value("rank", 0);
    if (rank < 1) {
        const KronSpectrum spectrum = kron_spectrum(theta);
        rank = 0;
        for (Eigen::Index i = 0; i < spectrum.sigmas.size(); ++i) {
            if (spectrum.sigmas(i) > 1e-10 * spectrum.sigmas(0)) {
                ++rank;
            }
        }
    }
    long support = config.value("support", 0L);
    if (support < 1) {
        support = (gamma.matrix().array() != 0.0).count();
    }

    const IncoherenceReport report = incoherence_diagnostic(theta, gamma, params, rank, support);
    std::ofstream csv(out / "incoherence.csv", std::ios::trunc);
    csv << "sv_theta_gamma,sv_theta_perp_gamma,sv_theta_gamma_perp,sv_theta_perp_gamma_perp,"
           "lambda,bound_16_over_lambda2,bound_1_over_16lambda2\n"
        << format_double(report.sv_theta_gamma) << ',' << format_double(report.sv_theta_perp_gamma)
        << ',' << format_double(report.sv_theta_gamma_perp) << ','
        << format_double(report.sv_theta_perp_gamma_perp) << ','
        << format_double(report.lambda_cap) << ',' << format_double(report.bound_outer) << ','
        << format_double(report.bound_inner) << '\n';

    json extra;
    extra["rank"] = rank;
    extra["support"] = support;
    write_manifest(out, "incoherence", config, {"incoherence.csv"}, extra);
    return 0;
}

int cmd_bootstrap(const json& raw) {
    const json config = unwrap_manifest(raw);
    const fs::path out = require_out_dir(config);
    if (!config.contains("input")) {
        throw argument_error("bootstrap needs an --input sample set");
    }
    const SampleSet samples = load_sample_set(config.at("input").get<std::string>());
    const SolverConfig solver_cfg = solver_config_from(config);
    const StCovariance scm = sample_covariance(samples);
    const LambdaChoice choice = resolve_lambdas(
        config.contains("lambda_theta") || config.contains("lambda_gamma") ||
                config.value("lambda_mode", "") == "cv"
            ? config
            : [&] {
                  json c = config;
                  c["lambda_mode"] = "theory";
                  return c;
              }(),
        scm, &samples, samples.n, false, solver_cfg);

    const double fraction = config.value("fraction", 0.2);
    const int reps = config.value("reps", 20);
    const BootstrapResult result = bootstrap_temporal_factors(samples, fraction, reps,
                                                              choice.params, solver_cfg,
                                                              config_seed(config));

    std::vector<double> idx(result.deviations.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<double>(i);
    }
    write_two_column_csv(out / "bootstrap.csv", "rep,deviation", idx, result.deviations);
    json extra;
    extra["rms_variation"] = result.rms_variation;
    extra["lambda_theta"] = lambda_to_json(choice.params.lambda_theta);
    extra["lambda_gamma"] = lambda_to_json(choice.params.lambda_gamma);
    write_manifest(out, "bootstrap", config, {"bootstrap.csv"}, extra);
    std::cout << "rms_variation=" << format_double(result.rms_variation) << "\n";
    return 0;
}

namespace {

json base_config(const std::string& preset_name, const std::string& config_path) {
    json cfg = json::object();
    if (!preset_name.empty()) {
        cfg = preset(preset_name);
    }
    if (!config_path.empty()) {
        cfg.merge_patch(unwrap_manifest(read_json_path(config_path)));
    }
    return cfg;
}

void apply_seed_default(json& cfg) {
    if (cfg.contains("seed")) {
        return;
    }
    if (const char* env = std::getenv("KRONSHRINK_SEED")) {
        try {
            cfg["seed"] = static_cast<std::uint64_t>(std::stoull(env));
            return;
        } catch (const std::exception&) {
            throw argument_error("KRONSHRINK_SEED is not an unsigned integer");
        }
    }
    cfg["seed"] = 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Robust Kronecker-product covariance estimation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    struct {
        std::string config, preset, out, input, theta, gamma;
        std::string lambda_theta, lambda_gamma;
        std::uint64_t seed = 0;
        long samples_n = 0, n = 0;
        int reps = 0, horizon = 0, cv_folds = 0, rank = 0, max_iter = 0;
        long support = 0;
        double fraction = 0.0, t0 = 0.0, eps = 0.0, tol = 0.0, tau0 = 0.0;
        bool toeplitz = false, lambda_theory = false, lambda_cv = false;
    } opt;

    auto add_common = [&](CLI::App* sub, bool with_preset) {
        sub->add_option("--config", opt.config, "JSON config file (or a manifest from a prior run)");
        if (with_preset) {
            sub->add_option("--preset", opt.preset, "named canned configuration");
        }
        sub->add_option("--out", opt.out, "output directory (created if missing)");
        sub->add_option("--seed", opt.seed, "seed recorded in the manifest");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate truth/corrupted covariances and samples");
    add_common(synth, true);
    synth->add_option("--samples-n", opt.samples_n, "also draw this many samples");

    CLI::App* estimate = app.add_subcommand("estimate", "fit the low-rank plus sparse model");
    add_common(estimate, false);
    estimate->add_option("--input", opt.input, "covariance or sample-set CSV");
    estimate->add_flag("--toeplitz", opt.toeplitz, "enforce the block-Toeplitz constraint");
    estimate->add_option("--lambda-theta", opt.lambda_theta, "nuclear-norm weight (or 'inf')");
    estimate->add_option("--lambda-gamma", opt.lambda_gamma, "1-norm weight (or 'inf')");
    estimate->add_flag("--lambda-theory", opt.lambda_theory, "use the theorem formulas");
    estimate->add_flag("--lambda-cv", opt.lambda_cv, "select weights by cross validation");
    estimate->add_option("--t0", opt.t0, "confidence parameter for --lambda-theory");
    estimate->add_option("--eps", opt.eps, "epsilon parameter for --lambda-theory");
    estimate->add_option("--n", opt.n, "sample count behind a covariance input");
    estimate->add_option("--cv-folds", opt.cv_folds, "folds for --lambda-cv");
    estimate->add_option("--tol", opt.tol, "solver convergence tolerance");
    estimate->add_option("--max-iter", opt.max_iter, "solver iteration cap");
    estimate->add_option("--tau0", opt.tau0, "solver initial step size");

    CLI::App* benchmark = app.add_subcommand("benchmark", "Monte Carlo MSE benchmark");
    add_common(benchmark, true);
    benchmark->add_option("--reps", opt.reps, "replicates per sample count");
    benchmark->add_option("--horizon", opt.horizon, "prediction horizon (frames)");

    CLI::App* spectra = app.add_subcommand("spectra", "Kronecker and PCA spectra of a covariance");
    add_common(spectra, false);
    spectra->add_option("--input", opt.input, "covariance CSV");

    CLI::App* qq = app.add_subcommand("qq", "QQ data of covariance entries against the normal");
    add_common(qq, false);
    qq->add_option("--input", opt.input, "covariance CSV");

    CLI::App* incoherence = app.add_subcommand("incoherence", "subspace incoherence diagnostic");
    add_common(incoherence, false);
    incoherence->add_option("--theta", opt.theta, "low-separation-rank covariance CSV");
    incoherence->add_option("--gamma", opt.gamma, "sparse covariance CSV");
    incoherence->add_option("--lambda-theta", opt.lambda_theta, "nuclear-norm weight");
    incoherence->add_option("--lambda-gamma", opt.lambda_gamma, "1-norm weight");
    incoherence->add_option("--rank", opt.rank, "separation rank (default: from theta)");
    incoherence->add_option("--support", opt.support, "support size (default: from gamma)");

    CLI::App* bootstrap = app.add_subcommand("bootstrap", "temporal-factor stability bootstrap");
    add_common(bootstrap, false);
    bootstrap->add_option("--input", opt.input, "sample-set CSV");
    bootstrap->add_option("--fraction", opt.fraction, "spatial subset fraction");
    bootstrap->add_option("--reps", opt.reps, "bootstrap replicates");
    bootstrap->add_option("--lambda-theta", opt.lambda_theta, "nuclear-norm weight");
    bootstrap->add_option("--lambda-gamma", opt.lambda_gamma, "1-norm weight");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        json cfg = base_config(opt.preset, opt.config);
        auto set_if = [&](CLI::App* sub, const char* flag, const char* key, auto value) {
            if (sub->count(flag) > 0) {
                cfg[key] = value;
            }
        };
        CLI::App* sub = app.get_subcommands().front();
        set_if(sub, "--out", "out", opt.out);
        set_if(sub, "--seed", "seed", opt.seed);

        if (sub == synth) {
            set_if(sub, "--samples-n", "samples_n", opt.samples_n);
            apply_seed_default(cfg);
            return cmd_synth(cfg);
        }
        if (sub == estimate) {
            set_if(sub, "--input", "input", opt.input);
            if (opt.toeplitz) cfg["toeplitz"] = true;
            set_if(sub, "--lambda-theta", "lambda_theta", opt.lambda_theta);
            set_if(sub, "--lambda-gamma", "lambda_gamma", opt.lambda_gamma);
            if (opt.lambda_theory && opt.lambda_cv) {
                throw argument_error("--lambda-theory and --lambda-cv are mutually exclusive");
            }
            if (opt.lambda_theory) cfg["lambda_mode"] = "theory";
            if (opt.lambda_cv) cfg["lambda_mode"] = "cv";
            set_if(sub, "--t0", "t0", opt.t0);
            set_if(sub, "--eps", "eps", opt.eps);
            set_if(sub, "--n", "n", opt.n);
            set_if(sub, "--cv-folds", "cv_folds", opt.cv_folds);
            if (sub->count("--tol") > 0) cfg["solver"]["tol"] = opt.tol;
            if (sub->count("--max-iter") > 0) cfg["solver"]["max_iter"] = opt.max_iter;
            if (sub->count("--tau0") > 0) cfg["solver"]["tau0"] = opt.tau0;
            apply_seed_default(cfg);
            return cmd_estimate(cfg);
        }
        if (sub == benchmark) {
            set_if(sub, "--reps", "replicates", opt.reps);
            set_if(sub, "--horizon", "horizon", opt.horizon);
            apply_seed_default(cfg);
            return cmd_benchmark(cfg);
        }
        if (sub == spectra || sub == qq) {
            set_if(sub, "--input", "input", opt.input);
            apply_seed_default(cfg);
            return sub == spectra ? cmd_spectra(cfg) : cmd_qq(cfg);
        }
        if (sub == incoherence) {
            set_if(sub, "--theta", "theta", opt.theta);
            set_if(sub, "--gamma", "gamma", opt.gamma);
            set_if(sub, "--lambda-theta", "lambda_theta", opt.lambda_theta);
            set_if(sub, "--lambda-gamma", "lambda_gamma", opt.lambda_gamma);
            set_if(sub, "--rank", "rank", opt.rank);
            set_if(sub, "--support", "support", opt.support);
            apply_seed_default(cfg);
            return cmd_incoherence(cfg);
        }
        if (sub == bootstrap) {
            set_if(sub, "--input", "input", opt.input);
            set_if(sub, "--fraction", "fraction", opt.fraction);
            set_if(sub, "--reps", "reps", opt.reps);
            set_if(sub, "--lambda-theta", "lambda_theta", opt.lambda_theta);
            set_if(sub, "--lambda-gamma", "lambda_gamma", opt.lambda_gamma);
            apply_seed_default(cfg);
            return cmd_bootstrap(cfg);
        }
        throw argument_error("no command selected");
    } catch (const capability_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace kronshrink::cli
