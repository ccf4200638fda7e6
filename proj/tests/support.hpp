#pragma once

// Shared test helpers: a fully pinned RNG (no implementation-defined
// distributions), synthetic biased datasets, scratch directories.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fairdist/dataset.hpp"

namespace testsupport {

/// xorshift64* with a Box-Muller cache. Identical sequences on every
/// platform, unlike std::normal_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    double uniform() {   // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// |a - b| <= abs_floor or relative gap <= rel. The gradient-check contract.
inline bool close_rel(double a, double b, double rel = 1e-4, double abs_floor = 1e-7) {
    const double diff = std::fabs(a - b);
    if (diff <= abs_floor) return true;
    return diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

/// Synthetic two-group data with a group-correlated proxy feature and
/// group-dependent base rates, so an unconstrained classifier shows a clear
/// parity gap that regularized training can shrink. Cluster overlap is tuned
/// for the noisy-tabular regime (baseline accuracy in the 70s): weights stay
/// bounded and the regularized objective is well behaved, as on real data.
inline fairdist::Dataset synthetic_dataset(std::size_t m, std::uint64_t seed,
                                           double proxy_strength = 1.8) {
    Rng rng(seed);
    fairdist::Dataset ds;
    ds.feature_names = {"x0", "x1", "x2"};
    ds.features = fairdist::Matrix(m, 3);
    ds.labels.resize(m);
    ds.protected_attr.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int a = rng.uniform() < 0.45 ? 1 : 0;
        const double base_rate = a == 1 ? 0.62 : 0.38;
        const int y = rng.uniform() < base_rate ? 1 : 0;
        ds.protected_attr[i] = a;
        ds.labels[i] = y;
        ds.features(i, 0) = 0.8 * (y ? 1.0 : -1.0) + 1.5 * rng.normal();
        ds.features(i, 1) = -0.5 * (y ? 1.0 : -1.0) + 1.5 * rng.normal();
        ds.features(i, 2) = proxy_strength * a + rng.normal();
    }
    return ds;
}

/// Same generator, but guaranteed to have at least `min_count` samples in
/// every (a,y) cell; regularizers need two per group. Walks the seed forward
/// deterministically until the draw qualifies.
inline fairdist::Dataset synthetic_dataset_min_groups(std::size_t m, std::uint64_t seed,
                                                      std::size_t min_count = 2) {
    for (std::uint64_t s = seed;; ++s) {
        const fairdist::Dataset ds = synthetic_dataset(m, s);
        std::size_t count[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t i = 0; i < ds.size(); ++i) ++count[ds.protected_attr[i]][ds.labels[i]];
        if (count[0][0] >= min_count && count[0][1] >= min_count && count[1][0] >= min_count &&
            count[1][1] >= min_count)
            return ds;
    }
}

/// Write a dataset as a raw CSV an experiment config can ingest.
inline void write_dataset_csv(const fairdist::Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "x0,x1,x2,grp,outcome\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << fairdist::format_double(ds.features(i, 0)) << ','
            << fairdist::format_double(ds.features(i, 1)) << ','
            << fairdist::format_double(ds.features(i, 2)) << ',' << ds.protected_attr[i] << ','
            << ds.labels[i] << '\n';
    }
}

inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("fairdist_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    fairdist::ensure(in.good(), "read_file: cannot open ", path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// The standard experiment config for the synthetic CSV.
inline std::string synthetic_config(const std::string& csv_path, const std::string& out_dir,
                                    const std::string& extra = "") {
    std::string cfg;
    cfg += "dataset = " + csv_path + "\n";
    cfg += "feature.x0 = continuous\n";
    cfg += "feature.x1 = continuous\n";
    cfg += "feature.x2 = continuous\n";
    cfg += "feature.grp = protected\n";
    cfg += "feature.outcome = label\n";
    cfg += "split_fraction = 0.7\n";
    cfg += "seed = 42\n";
    cfg += "max_iters = 400\n";
    cfg += "out_dir = " + out_dir + "\n";
    cfg += extra;
    return cfg;
}

} // namespace testsupport
