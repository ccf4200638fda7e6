#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/model.hpp"

namespace fairdist {

/// Versioned text model format: a key-value header followed by numeric
/// arrays. Doubles are written with 17 significant digits, so a save/load
/// round trip reproduces finite values bit-exactly.
inline constexpr const char* kModelMagic = "fairdist-model v1";

namespace detail {

inline void write_stats(std::ostream& out, const std::vector<FeatureStat>& stats) {
    out << "stats " << stats.size() << "\n";
    for (const auto& s : stats)
        out << "stat " << format_double(s.mean) << " " << format_double(s.stddev) << " " << s.name
            << "\n";
}

inline void write_values(std::ostream& out, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ' ';
        out << format_double(v[i]);
    }
    out << '\n';
}

inline std::string next_line(std::istream& in, const char* what) {
    std::string line;
    ensure(static_cast<bool>(std::getline(in, line)), "model file: missing ", what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::string expect_key(std::istream& in, const std::string& key) {
    const std::string line = next_line(in, key.c_str());
    ensure(line.rfind(key + " ", 0) == 0, "model file: expected '", key, " ...', got '", line, "'");
    return line.substr(key.size() + 1);
}

inline std::vector<double> parse_values(const std::string& line, std::size_t n, const char* what) {
    std::istringstream iss(line);
    std::vector<double> out;
    std::string tok;
    while (iss >> tok) out.push_back(parse_double(tok, what));
    ensure(out.size() == n, "model file: ", what, " has ", out.size(), " values, expected ", n);
    return out;
}

inline std::vector<FeatureStat> read_stats(std::istream& in) {
    const std::size_t n = static_cast<std::size_t>(parse_long(expect_key(in, "stats"), "stat count"));
    std::vector<FeatureStat> stats;
    for (std::size_t i = 0; i < n; ++i) {
        std::istringstream iss(expect_key(in, "stat"));
        std::string mean_s, std_s, name;
        iss >> mean_s >> std_s;
        std::getline(iss, name);
        if (!name.empty() && name.front() == ' ') name.erase(0, 1);
        ensure(!name.empty(), "model file: stat entry missing feature name");
        stats.push_back({name, parse_double(mean_s, "stat mean"), parse_double(std_s, "stat stddev")});
    }
    return stats;
}

} // namespace detail

inline void save_model(const LinearModel& model, std::ostream& out) {
    out << kModelMagic << "\n";
    out << "kind linear\n";
    out << "dim " << model.dim() << "\n";
    detail::write_stats(out, model.norm_stats);
    out << "w ";
    detail::write_values(out, model.weights);
    out << "b " << format_double(model.bias) << "\n";
}

inline void save_model(const KernelModel& model, std::ostream& out) {
    ensure(model.alpha.size() == model.support_features.rows,
           "save_model: alpha size does not match support rows");
    out << kModelMagic << "\n";
    out << "kind kernel\n";
    out << "dim " << model.dim() << "\n";
    out << "gamma " << format_double(model.gamma) << "\n";
    detail::write_stats(out, model.norm_stats);
    out << "support " << model.support_features.rows << " " << model.support_features.cols << "\n";
    for (std::size_t i = 0; i < model.support_features.rows; ++i)
        detail::write_values(out, model.support_features.row_copy(i));
    out << "alpha ";
    detail::write_values(out, model.alpha);
    out << "b " << format_double(model.bias) << "\n";
}

using AnyModel = std::variant<LinearModel, KernelModel>;

inline void save_model(const AnyModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    ensure(out.good(), "save_model: cannot open '", path, "'");
    std::visit([&](const auto& m) { save_model(m, out); }, model);
    ensure(out.good(), "save_model: write failed for '", path, "'");
}

inline AnyModel load_model(std::istream& in) {
    ensure(detail::next_line(in, "magic") == kModelMagic, "model file: bad magic line");
    const std::string kind = detail::expect_key(in, "kind");
    const std::size_t dim =
        static_cast<std::size_t>(parse_long(detail::expect_key(in, "dim"), "dim"));

    if (kind == "linear") {
        LinearModel m;
        m.norm_stats = detail::read_stats(in);
        m.weights = detail::parse_values(detail::expect_key(in, "w"), dim, "weights");
        m.bias = parse_double(detail::expect_key(in, "b"), "bias");
        return m;
    }
    if (kind == "kernel") {
        KernelModel m;
        m.gamma = parse_double(detail::expect_key(in, "gamma"), "gamma");
        ensure(m.gamma > 0.0, "model file: gamma must be positive");
        m.norm_stats = detail::read_stats(in);
        std::istringstream dims(detail::expect_key(in, "support"));
        long rows = 0, cols = 0;
        dims >> rows >> cols;
        ensure(rows > 0 && cols >= 0 && static_cast<std::size_t>(cols) == dim,
               "model file: bad support dimensions");
        m.support_features = Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        for (long i = 0; i < rows; ++i) {
            const auto row = detail::parse_values(detail::next_line(in, "support row"),
                                                  static_cast<std::size_t>(cols), "support row");
            for (long j = 0; j < cols; ++j)
                m.support_features(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    row[static_cast<std::size_t>(j)];
        }
        m.alpha = detail::parse_values(detail::expect_key(in, "alpha"),
                                       static_cast<std::size_t>(rows), "alpha");
        m.bias = parse_double(detail::expect_key(in, "b"), "bias");
        return m;
    }
    throw Error("model file: unknown kind '" + kind + "'");
}

inline AnyModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    ensure(in.good(), "load_model: cannot open '", path, "'");
    return load_model(in);
}

/// Raw scores from either model kind.
inline std::vector<double> raw_scores(const AnyModel& model, const Matrix& features) {
    return std::visit([&](const auto& m) { return raw_scores(m, features); }, model);
}

} // namespace fairdist
