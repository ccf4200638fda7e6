#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/dataset.hpp"
#include "fairdist/training.hpp"

namespace fairdist {

/// Everything one experiment needs: dataset schema, split, training
/// hyperparameters, evaluation grid, output location. Parsed from a flat
/// `key = value` file; every key can also be overridden individually.
struct ExperimentConfig {
    std::string dataset_path;
    DatasetSchema schema;
    double split_fraction = 0.7;
    std::uint64_t seed = 42;          // drives the split; copied into train.seed
    TrainConfig train;
    double threshold = 0.5;           // default decision threshold
    double sweep_min = 0.3;
    double sweep_max = 0.7;
    std::size_t sweep_steps = 41;
    std::size_t riskdist_bins = 20;
    std::string out_dir = "out";

    void validate() const {
        ensure<ConfigError>(!dataset_path.empty(), "config: 'dataset' is required");
        schema.validate();
        ensure<ConfigError>(split_fraction > 0.0 && split_fraction < 1.0,
                            "config: 'split_fraction' must be in (0,1)");
        ensure<ConfigError>(threshold >= 0.0 && threshold <= 1.0,
                            "config: 'threshold' must be in [0,1]");
        ensure<ConfigError>(sweep_min < sweep_max && sweep_min >= 0.0 && sweep_max <= 1.0,
                            "config: sweep range must satisfy 0 <= sweep_min < sweep_max <= 1");
        ensure<ConfigError>(sweep_steps >= 2, "config: 'sweep_steps' must be at least 2");
        ensure<ConfigError>(riskdist_bins >= 2, "config: 'riskdist_bins' must be at least 2");
        train.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline FeatureSpec* find_feature(DatasetSchema& schema, const std::string& name) {
    for (auto& f : schema.features)
        if (f.name == name) return &f;
    return nullptr;
}

inline RowFilter& filter_for(DatasetSchema& schema, const std::string& column) {
    for (auto& f : schema.filters)
        if (f.column == column) return f;
    schema.filters.push_back(RowFilter{column, {}, std::nullopt, std::nullopt});
    return schema.filters.back();
}

inline double parse_config_double(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const Error&) {
        throw ConfigError("config: key '" + key + "': cannot parse number from '" + value + "'");
    }
}

inline long parse_config_long(const std::string& key, const std::string& value) {
    try {
        return parse_long(value);
    } catch (const Error&) {
        throw ConfigError("config: key '" + key + "': cannot parse integer from '" + value + "'");
    }
}

inline std::size_t parse_config_count(const std::string& key, const std::string& value) {
    const long v = parse_config_long(key, value);
    ensure<ConfigError>(v >= 0, "config: key '", key, "' must be non-negative, got ", value);
    return static_cast<std::size_t>(v);
}

} // namespace detail

/// Apply one `key = value` assignment. Used both by the file parser and by
/// command-line overrides.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_config_double;
    using detail::parse_config_long;

    if (key.rfind("feature.", 0) == 0) {
        const std::string rest = key.substr(8);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) {
            FeatureSpec spec;
            spec.name = rest;
            ensure<ConfigError>(!spec.name.empty(), "config: key '", key, "': empty feature name");
            if (value == "continuous") {
                spec.kind = FeatureKind::Continuous;
            } else if (value == "binary") {
                spec.kind = FeatureKind::Binary;
            } else if (value == "protected") {
                spec.kind = FeatureKind::Binary;
                spec.role = FeatureRole::Protected;
            } else if (value == "label") {
                spec.kind = FeatureKind::Binary;
                spec.role = FeatureRole::Label;
            } else {
                throw ConfigError("config: key '" + key + "': unknown feature type '" + value +
                                  "' (want continuous|binary|protected|label)");
            }
            ensure<ConfigError>(detail::find_feature(cfg.schema, spec.name) == nullptr,
                                "config: key '", key, "': duplicate feature");
            cfg.schema.features.push_back(spec);
            return;
        }
        const std::string name = rest.substr(0, dot);
        const std::string attr = rest.substr(dot + 1);
        FeatureSpec* spec = detail::find_feature(cfg.schema, name);
        ensure<ConfigError>(spec != nullptr, "config: key '", key,
                            "': feature '", name, "' not declared yet");
        ensure<ConfigError>(attr == "positive", "config: unknown feature attribute in key '", key, "'");
        spec->positive_value = value;
        return;
    }

    if (key.rfind("filter.", 0) == 0) {
        const std::string rest = key.substr(7);
        const auto dot = rest.rfind('.');
        ensure<ConfigError>(dot != std::string::npos && dot > 0,
                            "config: key '", key, "': want filter.<column>.<values|min|max>");
        const std::string column = rest.substr(0, dot);
        const std::string attr = rest.substr(dot + 1);
        RowFilter& f = detail::filter_for(cfg.schema, column);
        if (attr == "values") f.allowed_values = detail::split_list(value);
        else if (attr == "min") f.min_value = parse_config_double(key, value);
        else if (attr == "max") f.max_value = parse_config_double(key, value);
        else throw ConfigError("config: unknown filter attribute in key '" + key + "'");
        return;
    }

    if (key == "dataset") cfg.dataset_path = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "split_fraction") cfg.split_fraction = parse_config_double(key, value);
    else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(detail::parse_config_count(key, value));
        cfg.train.seed = cfg.seed;
    } else if (key == "model") {
        if (value == "lr") cfg.train.model_kind = ModelKind::LR;
        else if (value == "lsvm") cfg.train.model_kind = ModelKind::LSVM;
        else if (value == "ksvm") cfg.train.model_kind = ModelKind::KSVM;
        else throw ConfigError("config: key 'model': unknown value '" + value + "' (want lr|lsvm|ksvm)");
    } else if (key == "fairness") {
        if (value == "none") cfg.train.fairness_mode = std::nullopt;
        else if (value == "dp") cfg.train.fairness_mode = ParityMode::DP;
        else if (value == "eo") cfg.train.fairness_mode = ParityMode::EO;
        else throw ConfigError("config: key 'fairness': unknown value '" + value + "' (want none|dp|eo)");
    } else if (key == "method") {
        if (value == "ha") cfg.train.method = EqualizationMethod::HA;
        else if (value == "ga") cfg.train.method = EqualizationMethod::GA;
        else throw ConfigError("config: key 'method': unknown value '" + value + "' (want ha|ga)");
    } else if (key == "eta") cfg.train.eta = parse_config_double(key, value);
    else if (key == "lambda") {
        if (value == "auto") cfg.train.lambda = std::nullopt;
        else cfg.train.lambda = parse_config_double(key, value);
    } else if (key == "rbf_gamma") cfg.train.rbf_gamma = parse_config_double(key, value);
    else if (key == "lr_start") cfg.train.lr_start = parse_config_double(key, value);
    else if (key == "lr_end") cfg.train.lr_end = parse_config_double(key, value);
    else if (key == "momentum") cfg.train.momentum = parse_config_double(key, value);
    else if (key == "max_iters") cfg.train.max_iters = detail::parse_config_count(key, value);
    else if (key == "n_bins") cfg.train.ha.n_bins = detail::parse_config_count(key, value);
    else if (key == "sigma_c") cfg.train.ha.sigma_c = parse_config_double(key, value);
    else if (key == "threshold") cfg.threshold = parse_config_double(key, value);
    else if (key == "sweep_min") cfg.sweep_min = parse_config_double(key, value);
    else if (key == "sweep_max") cfg.sweep_max = parse_config_double(key, value);
    else if (key == "sweep_steps") cfg.sweep_steps = detail::parse_config_count(key, value);
    else if (key == "riskdist_bins") cfg.riskdist_bins = detail::parse_config_count(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto eq = trimmed.find('=');
        ensure<ConfigError>(eq != std::string::npos, "config: ", source, ":", lineno,
                            ": expected 'key = value', got '", trimmed, "'");
        const std::string key = detail::trim(trimmed.substr(0, eq));
        const std::string value = detail::trim(trimmed.substr(eq + 1));
        ensure<ConfigError>(!key.empty(), "config: ", source, ":", lineno, ": empty key");
        apply_config_entry(cfg, key, value);
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    ensure<ConfigError>(in.good(), "config: cannot open '", path, "'");
    return parse_config(in, path);
}

} // namespace fairdist
