#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/csv.hpp"
#include "fairdist/model.hpp"

namespace fairdist {

enum class FeatureKind { Continuous, Binary };
enum class FeatureRole { Feature, Protected, Label };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    FeatureRole role = FeatureRole::Feature;
    /// Raw value encoded as 1 for binary columns. When unset, the
    /// lexicographically larger of the two observed values maps to 1.
    std::optional<std::string> positive_value;
};

/// Row-level filter on a raw CSV column. The column does not have to be a
/// schema feature. Rows failing any filter are excluded before the
/// missing-value pass.
struct RowFilter {
    std::string column;
    std::vector<std::string> allowed_values;            // empty = no value filter
    std::optional<double> min_value, max_value;         // numeric range, inclusive
};

struct DatasetSchema {
    std::vector<FeatureSpec> features;
    std::vector<RowFilter> filters;

    const FeatureSpec& find_role(FeatureRole role) const {
        const FeatureSpec* found = nullptr;
        for (const auto& f : features) {
            if (f.role == role) {
                ensure<ConfigError>(!found, "schema: more than one column with role '",
                                    role == FeatureRole::Protected ? "protected" : "label", "'");
                found = &f;
            }
        }
        ensure<ConfigError>(found, "schema: no column with role '",
                            role == FeatureRole::Protected ? "protected" : "label", "'");
        return *found;
    }

    void validate() const {
        ensure<ConfigError>(!features.empty(), "schema: no columns declared");
        const auto& prot = find_role(FeatureRole::Protected);
        const auto& label = find_role(FeatureRole::Label);
        ensure<ConfigError>(prot.kind == FeatureKind::Binary,
                            "schema: protected column '", prot.name, "' must be binary");
        ensure<ConfigError>(label.kind == FeatureKind::Binary,
                            "schema: label column '", label.name, "' must be binary");
        std::set<std::string> seen;
        for (const auto& f : features)
            ensure<ConfigError>(seen.insert(f.name).second, "schema: duplicate column '", f.name, "'");
    }
};

/// Schema-selected raw columns, still as strings. Rows that failed a filter
/// or had a missing (empty) value in any schema column are gone already.
struct RawTable {
    std::vector<std::string> column_names;              // schema order
    std::vector<std::vector<std::string>> columns;      // column-major
    std::size_t dropped_missing = 0;
    std::size_t filtered_out = 0;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            if (column_names[j] == name) return j;
        throw Error("raw table: column '" + name + "' not found");
    }
};

struct Dataset {
    Matrix features;                      // M x m, protected/label excluded
    std::vector<int> labels;              // Y in {0,1}
    std::vector<int> protected_attr;      // A in {0,1}
    std::vector<std::string> feature_names;
    std::vector<FeatureStat> norm_stats;  // continuous feature columns only

    std::size_t size() const { return features.rows; }

    const FeatureStat* stat_for(const std::string& name) const {
        for (const auto& s : norm_stats)
            if (s.name == name) return &s;
        return nullptr;
    }
};

enum class ParityMode { DP, EO };

inline const char* to_string(ParityMode m) { return m == ParityMode::DP ? "DP" : "EO"; }

struct Group {
    int a = 0;
    int y = -1;                           // -1 in DP mode
    std::vector<std::size_t> indices;

    std::string key() const {
        std::string k = "a=" + std::to_string(a);
        if (y >= 0) k += ",y=" + std::to_string(y);
        return k;
    }
};

struct GroupPartition {
    ParityMode mode = ParityMode::DP;
    std::vector<Group> groups;            // DP: a=0, a=1. EO: (0,0), (1,0), (0,1), (1,1)
};

// ---------------------------------------------------------------------------
// load_csv

namespace detail {

inline bool is_missing(const std::string& v) { return v.empty(); }

inline bool passes_filter(const RowFilter& f, const std::string& value) {
    if (!f.allowed_values.empty() &&
        std::find(f.allowed_values.begin(), f.allowed_values.end(), value) == f.allowed_values.end())
        return false;
    if (f.min_value || f.max_value) {
        if (is_missing(value)) return false;
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (end != value.c_str() + value.size()) return false;
        if (f.min_value && v < *f.min_value) return false;
        if (f.max_value && v > *f.max_value) return false;
    }
    return true;
}

} // namespace detail

inline RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    const csv::Table table = csv::read_file(path);

    std::vector<std::size_t> schema_cols;
    for (const auto& f : schema.features) {
        ensure(table.has_column(f.name), "load_csv: column '", f.name, "' missing from ", path);
        schema_cols.push_back(table.column_index(f.name));
    }
    std::vector<std::size_t> filter_cols;
    for (const auto& f : schema.filters) {
        ensure(table.has_column(f.column), "load_csv: filter column '", f.column, "' missing from ", path);
        filter_cols.push_back(table.column_index(f.column));
    }

    RawTable out;
    for (const auto& f : schema.features) out.column_names.push_back(f.name);
    out.columns.resize(schema.features.size());

    for (const auto& row : table.rows) {
        bool keep = true;
        for (std::size_t k = 0; k < schema.filters.size(); ++k) {
            if (!detail::passes_filter(schema.filters[k], row[filter_cols[k]])) {
                keep = false;
                break;
            }
        }
        if (!keep) {
            ++out.filtered_out;
            continue;
        }
        bool missing = false;
        for (std::size_t j = 0; j < schema_cols.size(); ++j) {
            if (detail::is_missing(row[schema_cols[j]])) {
                missing = true;
                break;
            }
        }
        if (missing) {
            ++out.dropped_missing;
            continue;
        }
        for (std::size_t j = 0; j < schema_cols.size(); ++j)
            out.columns[j].push_back(row[schema_cols[j]]);
    }

    ensure(out.n_rows() > 0, "load_csv: no usable data rows in ", path,
           " (", out.filtered_out, " filtered, ", out.dropped_missing, " dropped for missing values)");

    // Continuous columns must parse now so bad data fails at load, not later.
    for (std::size_t j = 0; j < schema.features.size(); ++j) {
        if (schema.features[j].kind != FeatureKind::Continuous) continue;
        for (const auto& v : out.columns[j]) {
            char* end = nullptr;
            std::strtod(v.c_str(), &end);
            ensure(end == v.c_str() + v.size(),
                   "load_csv: non-numeric value '", v, "' in continuous column '",
                   schema.features[j].name, "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// preprocess

namespace detail {

/// Map a binary column's raw strings to 0/1. Columns already written as
/// 0/1 pass through; otherwise the declared positive value (or the
/// lexicographically larger of the two observed values) maps to 1.
inline std::vector<double> encode_binary(const std::vector<std::string>& raw,
                                         const FeatureSpec& spec) {
    std::set<std::string> distinct(raw.begin(), raw.end());
    ensure(distinct.size() <= 2, "preprocess: binary column '", spec.name, "' has ",
           distinct.size(), " distinct values");

    const bool already_01 =
        std::all_of(distinct.begin(), distinct.end(),
                    [](const std::string& v) { return v == "0" || v == "1"; });
    std::string one_value;
    if (spec.positive_value) {
        one_value = *spec.positive_value;
        ensure(already_01 || distinct.count(one_value) > 0,
               "preprocess: positive value '", one_value, "' never occurs in column '", spec.name, "'");
    } else if (!already_01) {
        ensure(distinct.size() == 2, "preprocess: binary column '", spec.name,
               "' has a single non-0/1 value '", *distinct.begin(), "'");
        one_value = *std::next(distinct.begin());   // lexicographically larger
    }

    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (already_01 && !spec.positive_value)
            out[i] = raw[i] == "1" ? 1.0 : 0.0;
        else
            out[i] = raw[i] == one_value ? 1.0 : 0.0;
    }
    return out;
}

inline std::pair<double, double> fit_mean_stddev(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());    // population variance
    return {mean, std::sqrt(var)};
}

} // namespace detail

/// Standardize continuous columns, 0/1-encode binary columns, pull the
/// protected and label columns out of the feature matrix. When `fit_stats`
/// is given (e.g. training-set statistics), it is applied as-is; otherwise
/// statistics are fitted on `raw`.
inline Dataset preprocess(const RawTable& raw, const DatasetSchema& schema,
                          const std::vector<FeatureStat>* fit_stats = nullptr) {
    schema.validate();
    const std::size_t m_rows = raw.n_rows();
    ensure(m_rows > 0, "preprocess: empty table");

    Dataset ds;
    std::vector<std::vector<double>> feature_cols;

    for (const auto& spec : schema.features) {
        const auto& col = raw.columns[raw.column_index(spec.name)];
        std::vector<double> values;

        if (spec.kind == FeatureKind::Binary) {
            values = detail::encode_binary(col, spec);
        } else {
            values.resize(col.size());
            for (std::size_t i = 0; i < col.size(); ++i)
                values[i] = parse_double(col[i], "column '" + spec.name + "'");

            FeatureStat st;
            if (fit_stats) {
                const FeatureStat* found = nullptr;
                for (const auto& s : *fit_stats)
                    if (s.name == spec.name) found = &s;
                ensure(found, "preprocess: no fitted stats for continuous column '", spec.name, "'");
                st = *found;
            } else {
                auto [mean, stddev] = detail::fit_mean_stddev(values);
                ensure(stddev > 1e-12, "preprocess: zero-variance continuous column '", spec.name, "'");
                st = {spec.name, mean, stddev};
            }
            ensure(st.stddev > 1e-12, "preprocess: zero stddev for column '", spec.name, "'");
            for (auto& x : values) x = (x - st.mean) / st.stddev;
            ds.norm_stats.push_back(st);
        }

        if (spec.role == FeatureRole::Protected) {
            ds.protected_attr.resize(values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                ds.protected_attr[i] = values[i] > 0.5 ? 1 : 0;
        } else if (spec.role == FeatureRole::Label) {
            ds.labels.resize(values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                ds.labels[i] = values[i] > 0.5 ? 1 : 0;
        } else {
            ds.feature_names.push_back(spec.name);
            feature_cols.push_back(std::move(values));
        }
    }

    ds.features = Matrix(m_rows, feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j)
        for (std::size_t i = 0; i < m_rows; ++i)
            ds.features(i, j) = feature_cols[j][i];
    return ds;
}

// ---------------------------------------------------------------------------
// split

namespace detail {

/// Smallest n with n >= fraction*M, tolerating the usual binary-fraction
/// representation error.
inline std::size_t train_count(std::size_t m, double fraction) {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m) - 1e-9));
}

/// Deterministic Fisher-Yates on mt19937_64. std::shuffle is not pinned by
/// the standard, so the draw is spelled out here.
inline std::vector<std::size_t> shuffled_indices(std::size_t m, std::uint64_t seed) {
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = m; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.norm_stats = ds.norm_stats;
    out.features = Matrix(rows.size(), ds.features.cols);
    out.labels.resize(rows.size());
    out.protected_attr.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ds.features.cols; ++j)
            out.features(i, j) = ds.features(rows[i], j);
        out.labels[i] = ds.labels[rows[i]];
        out.protected_attr[i] = ds.protected_attr[rows[i]];
    }
    return out;
}

inline bool has_all_ay_groups(const Dataset& ds) {
    bool seen[2][2] = {{false, false}, {false, false}};
    for (std::size_t i = 0; i < ds.size(); ++i)
        seen[ds.protected_attr[i]][ds.labels[i]] = true;
    return seen[0][0] && seen[0][1] && seen[1][0] && seen[1][1];
}

} // namespace detail

/// Random train/test split. Continuous features are re-standardized so that
/// the stored statistics are fitted on the training rows only and the test
/// rows are transformed with those same training statistics. (Standardization
/// is affine, so refitting on the standardized training columns composes
/// exactly with the original transform.)
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
    ensure(ds.size() >= 2, "split: need at least 2 samples, have ", ds.size());
    ensure(train_fraction > 0.0 && train_fraction < 1.0,
           "split: train_fraction must be in (0,1), got ", train_fraction);
    ensure(detail::has_all_ay_groups(ds),
           "split: input is missing one of the four (protected, label) groups");

    const auto idx = detail::shuffled_indices(ds.size(), seed);
    const std::size_t n_train = detail::train_count(ds.size(), train_fraction);
    ensure(n_train >= 1 && n_train < ds.size(),
           "split: fraction ", train_fraction, " leaves an empty side for M=", ds.size());

    Dataset train = detail::take_rows(ds, {idx.begin(), idx.begin() + static_cast<long>(n_train)});
    Dataset test = detail::take_rows(ds, {idx.begin() + static_cast<long>(n_train), idx.end()});

    for (auto& st : train.norm_stats) {
        std::size_t col = 0;
        while (col < train.feature_names.size() && train.feature_names[col] != st.name) ++col;
        ensure(col < train.feature_names.size(), "split: stat for unknown column '", st.name, "'");

        std::vector<double> train_col(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) train_col[i] = train.features(i, col);
        auto [mu, sigma] = detail::fit_mean_stddev(train_col);
        ensure(sigma > 1e-12, "split: column '", st.name, "' has zero variance on the training rows");

        for (std::size_t i = 0; i < train.size(); ++i)
            train.features(i, col) = (train.features(i, col) - mu) / sigma;
        for (std::size_t i = 0; i < test.size(); ++i)
            test.features(i, col) = (test.features(i, col) - mu) / sigma;

        // Compose back into raw-data units: z = (x - mean)/stddev, then
        // (z - mu)/sigma == (x - (mean + stddev*mu)) / (stddev*sigma).
        const FeatureStat composed{st.name, st.mean + st.stddev * mu, st.stddev * sigma};
        st = composed;
        for (auto& ts : test.norm_stats)
            if (ts.name == st.name) ts = composed;
    }

    ensure(detail::has_all_ay_groups(train),
           "split: training split is missing one of the four (protected, label) groups");
    ensure(detail::has_all_ay_groups(test),
           "split: test split is missing one of the four (protected, label) groups");
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// partition_groups

inline GroupPartition partition_groups(const Dataset& ds, ParityMode mode) {
    ensure(ds.size() > 0, "partition_groups: empty dataset");
    GroupPartition part;
    part.mode = mode;
    if (mode == ParityMode::DP) {
        part.groups = {Group{0, -1, {}}, Group{1, -1, {}}};
        for (std::size_t i = 0; i < ds.size(); ++i)
            part.groups[static_cast<std::size_t>(ds.protected_attr[i])].indices.push_back(i);
    } else {
        part.groups = {Group{0, 0, {}}, Group{1, 0, {}}, Group{0, 1, {}}, Group{1, 1, {}}};
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::size_t g = static_cast<std::size_t>(ds.protected_attr[i]) +
                                  2 * static_cast<std::size_t>(ds.labels[i]);
            part.groups[g].indices.push_back(i);
        }
    }
    for (const auto& g : part.groups)
        ensure(!g.indices.empty(), "partition_groups: empty group ", g.key());
    return part;
}

/// Snapshot export: feature columns, then A and Y. Used for test fixtures.
inline void export_csv(const Dataset& ds, std::ostream& out) {
    std::vector<std::string> header = ds.feature_names;
    header.push_back("A");
    header.push_back("Y");
    csv::write_row(out, header);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::string> row;
        for (std::size_t j = 0; j < ds.features.cols; ++j)
            row.push_back(format_double(ds.features(i, j)));
        row.push_back(std::to_string(ds.protected_attr[i]));
        row.push_back(std::to_string(ds.labels[i]));
        csv::write_row(out, row);
    }
}

inline void export_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    ensure(out.good(), "export_csv: cannot open '", path, "'");
    export_csv(ds, out);
}

} // namespace fairdist
