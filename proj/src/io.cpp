#include "kronshrink/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace kronshrink {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw argument_error("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw argument_error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw argument_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw argument_error("failed while writing " + path.string());
    }
}

double parse_double(std::string_view token, const std::filesystem::path& path) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw argument_error("bad numeric field '" + std::string(token) + "' in " + path.string());
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                         std::chars_format::general, 17);
    if (ec != std::errc{}) {
        throw numerical_error("failed to format a double");
    }
    return std::string(buf, ptr);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 20);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out.push_back(',');
            }
            out += format_double(m(i, j));
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw argument_error("cannot open " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = line.find(',', start);
            const std::size_t stop = comma == std::string::npos ? line.size() : comma;
            row.push_back(parse_double(std::string_view(line).substr(start, stop - start), path));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw argument_error("ragged CSV rows in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw argument_error("empty CSV " + path.string());
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.front().size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void save_covariance(const std::filesystem::path& csv_path, const StCovariance& cov) {
    write_matrix_csv(csv_path, cov.matrix());
    nlohmann::ordered_json desc;
    desc["p_t"] = cov.dims().p_t;
    desc["p_s"] = cov.dims().p_s;
    write_text_file(sidecar_path(csv_path), desc.dump(2) + "\n");
}

StCovariance load_covariance(const std::filesystem::path& csv_path) {
    const nlohmann::json desc = read_json_file(sidecar_path(csv_path));
    if (!desc.contains("p_t") || !desc.contains("p_s")) {
        throw argument_error("descriptor " + sidecar_path(csv_path).string() +
                             " lacks p_t/p_s fields");
    }
    const Dims dims(desc.at("p_t").get<int>(), desc.at("p_s").get<int>());
    Matrix m = read_matrix_csv(csv_path);
    if (m.rows() != dims.total() || m.cols() != dims.total()) {
        throw argument_error("matrix in " + csv_path.string() +
                             " does not match its descriptor dimensions");
    }
    return StCovariance(dims, std::move(m));
}

void save_sample_set(const std::filesystem::path& csv_path, const SampleSet& samples) {
    write_matrix_csv(csv_path, samples.data);
    nlohmann::ordered_json desc;
    desc["p_t"] = samples.dims.p_t;
    desc["p_s"] = samples.dims.p_s;
    desc["n"] = samples.n;
    desc["seed"] = samples.seed;
    write_text_file(sidecar_path(csv_path), desc.dump(2) + "\n");
}

SampleSet load_sample_set(const std::filesystem::path& csv_path) {
    const nlohmann::json desc = read_json_file(sidecar_path(csv_path));
    for (const char* key : {"p_t", "p_s", "n"}) {
        if (!desc.contains(key)) {
            throw argument_error("sample descriptor " + sidecar_path(csv_path).string() +
                                 " lacks field " + key);
        }
    }
    const Dims dims(desc.at("p_t").get<int>(), desc.at("p_s").get<int>());
    const long n = desc.at("n").get<long>();
    Matrix data = read_matrix_csv(csv_path);
    if (data.rows() != n || data.cols() != dims.total()) {
        throw argument_error("sample matrix in " + csv_path.string() +
                             " does not match its descriptor");
    }
    return SampleSet{dims, n, std::move(data), desc.value("seed", std::uint64_t{0})};
}

bool is_sample_set_file(const std::filesystem::path& csv_path) {
    const std::filesystem::path side = sidecar_path(csv_path);
    if (!std::filesystem::exists(side)) {
        throw argument_error("missing descriptor " + side.string());
    }
    return read_json_file(side).contains("n");
}

}  // namespace kronshrink
