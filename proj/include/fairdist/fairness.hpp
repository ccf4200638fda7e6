#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/dataset.hpp"
#include "fairdist/model.hpp"

namespace fairdist {

/// Additive floor on unnormalized bin counts. The symmetric histogram KL is
/// undefined for empty bins; the floor keeps every log ratio finite while
/// preserving differentiability.
inline constexpr double kHistogramFloor = 1e-8;

/// Lower clamp on MLE variances so the Gaussian KL cannot divide by ~0 on a
/// degenerate group.
inline constexpr double kVarianceFloor = 1e-6;

enum class EqualizationMethod { HA, GA };

inline const char* to_string(EqualizationMethod m) {
    return m == EqualizationMethod::HA ? "HA" : "GA";
}

struct HaParams {
    std::size_t n_bins = 20;
    double sigma_c = 0.025;   // half the default bin width
};

/// Differentiable histogram of risk scores: Gaussian-kernel counts per bin,
/// floored and normalized to sum to one.
struct SoftHistogram {
    std::vector<double> centers;      // (j - 1/2)/N on [0,1], strictly increasing
    double bin_width = 0.0;
    double sigma_c = 0.0;
    std::vector<double> mass;         // floored + normalized, sums to 1
    std::vector<double> raw_counts;   // kernel counts before floor/normalize
    double total_weight = 0.0;        // sum(raw_counts + floor), the normalizer
};

struct GaussianMoments {
    double mu = 0.0;
    double var = 0.0;                 // floored at kVarianceFloor
    std::size_t count = 0;
    bool var_floored = false;
};

/// A regularizer evaluation: the distance value plus its analytic gradient
/// with respect to every sample's raw score (same indexing as the score
/// vector that produced it).
struct RegularizerValue {
    double value = 0.0;
    std::vector<double> gradient;
};

inline std::vector<double> histogram_centers(std::size_t n_bins) {
    std::vector<double> centers(n_bins);
    for (std::size_t j = 0; j < n_bins; ++j)
        centers[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n_bins);
    return centers;
}

inline SoftHistogram soft_histogram(const std::vector<double>& scores, std::size_t n_bins,
                                    double sigma_c) {
    ensure(!scores.empty(), "soft_histogram: empty score set");
    ensure(n_bins >= 2, "soft_histogram: need at least 2 bins, got ", n_bins);
    ensure(sigma_c > 0.0, "soft_histogram: sigma_c must be positive, got ", sigma_c);

    SoftHistogram h;
    h.centers = histogram_centers(n_bins);
    h.bin_width = 1.0 / static_cast<double>(n_bins);
    h.sigma_c = sigma_c;
    h.raw_counts.assign(n_bins, 0.0);

    const double inv_two_sigma2 = 1.0 / (2.0 * sigma_c * sigma_c);
    for (double s : scores) {
        ensure(std::isfinite(s), "soft_histogram: non-finite score");
        for (std::size_t j = 0; j < n_bins; ++j) {
            const double d = s - h.centers[j];
            h.raw_counts[j] += std::exp(-d * d * inv_two_sigma2);
        }
    }

    h.total_weight = 0.0;
    for (double c : h.raw_counts) h.total_weight += c + kHistogramFloor;
    h.mass.resize(n_bins);
    for (std::size_t j = 0; j < n_bins; ++j)
        h.mass[j] = (h.raw_counts[j] + kHistogramFloor) / h.total_weight;
    return h;
}

inline double kl_symmetric_hist(const SoftHistogram& h0, const SoftHistogram& h1) {
    ensure(h0.centers.size() == h1.centers.size(),
           "kl_symmetric_hist: bin count mismatch (", h0.centers.size(), " vs ", h1.centers.size(), ")");
    for (std::size_t j = 0; j < h0.centers.size(); ++j)
        ensure(std::abs(h0.centers[j] - h1.centers[j]) <= 1e-12,
               "kl_symmetric_hist: bin centers differ at index ", j);
    double acc = 0.0;
    for (std::size_t j = 0; j < h0.mass.size(); ++j) {
        const double a = h0.mass[j];
        const double b = h1.mass[j];
        if (a == b) continue;   // (a-b)*log(a/b) == 0 exactly
        acc += (a - b) * std::log(a / b);
    }
    return acc;
}

inline GaussianMoments gaussian_moments(const std::vector<double>& raw_scores) {
    ensure(raw_scores.size() >= 2, "gaussian_moments: need at least 2 samples, have ",
           raw_scores.size());
    GaussianMoments m;
    m.count = raw_scores.size();
    const double n = static_cast<double>(m.count);
    for (double x : raw_scores) {
        ensure(std::isfinite(x), "gaussian_moments: non-finite raw score");
        m.mu += x;
    }
    m.mu /= n;
    double var = 0.0;
    for (double x : raw_scores) var += (x - m.mu) * (x - m.mu);
    var /= n;                     // MLE (1/n) variance
    m.var_floored = var < kVarianceFloor;
    m.var = m.var_floored ? kVarianceFloor : var;
    return m;
}

inline double kl_symmetric_gauss(const GaussianMoments& m0, const GaussianMoments& m1) {
    ensure(std::isfinite(m0.mu) && std::isfinite(m1.mu) && std::isfinite(m0.var) &&
               std::isfinite(m1.var),
           "kl_symmetric_gauss: non-finite moments");
    ensure(m0.var > 0.0 && m1.var > 0.0, "kl_symmetric_gauss: non-positive variance");
    const double dmu = m0.mu - m1.mu;
    return 0.5 * ((dmu * dmu + m0.var) / m1.var + (dmu * dmu + m1.var) / m0.var - 2.0);
}

// ---------------------------------------------------------------------------
// Regularizers

namespace detail {

/// Distance between one group pair plus its gradient contribution, histogram
/// method. Gradients chain through the sigmoid: all inputs here are raw
/// scores, the histograms live on risk scores.
inline double ha_pair(const std::vector<double>& raw,
                      const std::vector<std::size_t>& idx0,
                      const std::vector<std::size_t>& idx1, const HaParams& params,
                      std::vector<double>& grad) {
    std::vector<double> s0(idx0.size()), s1(idx1.size());
    for (std::size_t i = 0; i < idx0.size(); ++i) s0[i] = risk_score(raw[idx0[i]]);
    for (std::size_t i = 0; i < idx1.size(); ++i) s1[i] = risk_score(raw[idx1[i]]);

    const SoftHistogram h0 = soft_histogram(s0, params.n_bins, params.sigma_c);
    const SoftHistogram h1 = soft_histogram(s1, params.n_bins, params.sigma_c);
    const double value = kl_symmetric_hist(h0, h1);

    const std::size_t n = h0.centers.size();
    // d(value)/d(mass_j) for each side of the pair
    std::vector<double> u0(n), u1(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = h0.mass[j];
        const double b = h1.mass[j];
        const double log_ratio = std::log(a / b);
        u0[j] = log_ratio + 1.0 - b / a;
        u1[j] = -log_ratio + 1.0 - a / b;
    }

    const double inv_sigma2 = 1.0 / (params.sigma_c * params.sigma_c);
    const double inv_two_sigma2 = 0.5 * inv_sigma2;

    auto accumulate = [&](const std::vector<std::size_t>& idx, const std::vector<double>& s,
                          const SoftHistogram& h, const std::vector<double>& u) {
        double u_bar = 0.0;
        for (std::size_t j = 0; j < n; ++j) u_bar += u[j] * h.mass[j];
        for (std::size_t i = 0; i < idx.size(); ++i) {
            // d(value)/d(score_i) via the normalized counts; then the sigmoid
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = s[i] - h.centers[j];
                const double w = std::exp(-d * d * inv_two_sigma2);
                acc += (u[j] - u_bar) / h.total_weight * w * (-d * inv_sigma2);
            }
            const double sig = s[i];
            grad[idx[i]] += acc * sig * (1.0 - sig);
        }
    };
    accumulate(idx0, s0, h0, u0);
    accumulate(idx1, s1, h1, u1);
    return value;
}

/// Distance between one group pair, Gaussian-moment method, computed on raw
/// scores directly. Gradients through a floored variance are zero.
inline double ga_pair(const std::vector<double>& raw,
                      const std::vector<std::size_t>& idx0,
                      const std::vector<std::size_t>& idx1, std::vector<double>& grad) {
    std::vector<double> x0(idx0.size()), x1(idx1.size());
    for (std::size_t i = 0; i < idx0.size(); ++i) x0[i] = raw[idx0[i]];
    for (std::size_t i = 0; i < idx1.size(); ++i) x1[i] = raw[idx1[i]];

    const GaussianMoments m0 = gaussian_moments(x0);
    const GaussianMoments m1 = gaussian_moments(x1);
    const double value = kl_symmetric_gauss(m0, m1);

    const double dmu = m0.mu - m1.mu;
    const double inv_v0 = 1.0 / m0.var;
    const double inv_v1 = 1.0 / m1.var;
    const double dd_dmu0 = dmu * (inv_v0 + inv_v1);
    const double dd_dv0 = 0.5 * (-dmu * dmu * inv_v0 * inv_v0 + inv_v1 - m1.var * inv_v0 * inv_v0);
    const double dd_dv1 = 0.5 * (-dmu * dmu * inv_v1 * inv_v1 + inv_v0 - m0.var * inv_v1 * inv_v1);

    const double n0 = static_cast<double>(idx0.size());
    for (std::size_t i = 0; i < idx0.size(); ++i) {
        double g = dd_dmu0 / n0;
        if (!m0.var_floored) g += dd_dv0 * 2.0 * (x0[i] - m0.mu) / n0;
        grad[idx0[i]] += g;
    }
    const double n1 = static_cast<double>(idx1.size());
    for (std::size_t i = 0; i < idx1.size(); ++i) {
        double g = -dd_dmu0 / n1;
        if (!m1.var_floored) g += dd_dv1 * 2.0 * (x1[i] - m1.mu) / n1;
        grad[idx1[i]] += g;
    }
    return value;
}

inline double pair_distance(const std::vector<double>& raw, const std::vector<std::size_t>& idx0,
                            const std::vector<std::size_t>& idx1, EqualizationMethod method,
                            const HaParams& params, std::vector<double>& grad) {
    ensure(idx0.size() >= 2, "regularizer: group with ", idx0.size(), " sample(s), need at least 2");
    ensure(idx1.size() >= 2, "regularizer: group with ", idx1.size(), " sample(s), need at least 2");
    for (auto i : idx0) ensure(i < raw.size(), "regularizer: group index out of range");
    for (auto i : idx1) ensure(i < raw.size(), "regularizer: group index out of range");
    return method == EqualizationMethod::HA ? ha_pair(raw, idx0, idx1, params, grad)
                                            : ga_pair(raw, idx0, idx1, grad);
}

} // namespace detail

inline RegularizerValue regularizer_dp(const std::vector<double>& raw_scores,
                                       const GroupPartition& partition,
                                       EqualizationMethod method,
                                       const HaParams& params = {}) {
    ensure(partition.mode == ParityMode::DP, "regularizer_dp: partition is not DP-mode");
    ensure(partition.groups.size() == 2, "regularizer_dp: expected 2 groups, got ",
           partition.groups.size());
    RegularizerValue out;
    out.gradient.assign(raw_scores.size(), 0.0);
    out.value = detail::pair_distance(raw_scores, partition.groups[0].indices,
                                      partition.groups[1].indices, method, params, out.gradient);
    return out;
}

inline RegularizerValue regularizer_eo(const std::vector<double>& raw_scores,
                                       const GroupPartition& partition,
                                       EqualizationMethod method,
                                       const HaParams& params = {}) {
    ensure(partition.mode == ParityMode::EO, "regularizer_eo: partition is not EO-mode");
    ensure(partition.groups.size() == 4, "regularizer_eo: expected 4 groups, got ",
           partition.groups.size());
    RegularizerValue out;
    out.gradient.assign(raw_scores.size(), 0.0);
    // negative-label pair (a=0,y=0) vs (a=1,y=0), then the positive-label pair
    out.value = detail::pair_distance(raw_scores, partition.groups[0].indices,
                                      partition.groups[1].indices, method, params, out.gradient);
    out.value += detail::pair_distance(raw_scores, partition.groups[2].indices,
                                       partition.groups[3].indices, method, params, out.gradient);
    return out;
}

inline RegularizerValue regularizer(const std::vector<double>& raw_scores,
                                    const GroupPartition& partition, EqualizationMethod method,
                                    const HaParams& params = {}) {
    return partition.mode == ParityMode::DP ? regularizer_dp(raw_scores, partition, method, params)
                                            : regularizer_eo(raw_scores, partition, method, params);
}

} // namespace fairdist
