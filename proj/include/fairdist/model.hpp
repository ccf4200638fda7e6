#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fairdist/common.hpp"

namespace fairdist {

/// Per-continuous-feature standardization parameters, kept with the model so
/// a trained model can be applied to freshly preprocessed data.
struct FeatureStat {
    std::string name;
    double mean = 0.0;
    double stddev = 1.0;
};

/// g(x) = w.x + b
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<FeatureStat> norm_stats;

    std::size_t dim() const { return weights.size(); }
};

/// g(x) = sum_i alpha_i K(X_i, x) + b with an RBF kernel. All training
/// features are retained; the subgradient solver does not produce exact
/// zeros, so there is no sparse support set.
struct KernelModel {
    std::vector<double> alpha;
    double bias = 0.0;
    Matrix support_features;
    double gamma = 0.5;
    std::vector<FeatureStat> norm_stats;

    std::size_t dim() const { return support_features.cols; }
};

inline double raw_score_linear(const LinearModel& model, const std::vector<double>& x) {
    ensure(x.size() == model.weights.size(),
           "raw_score_linear: feature dim ", x.size(), " != model dim ", model.weights.size());
    return dot(model.weights, x) + model.bias;
}

inline double rbf_kernel(const std::vector<double>& x1, const std::vector<double>& x2, double gamma) {
    ensure(x1.size() == x2.size(),
           "rbf_kernel: dimension mismatch (", x1.size(), " vs ", x2.size(), ")");
    ensure(gamma > 0.0, "rbf_kernel: gamma must be positive, got ", gamma);
    return std::exp(-gamma * squared_distance(x1.data(), x2.data(), x1.size()));
}

inline double raw_score_kernel(const KernelModel& model, const std::vector<double>& x) {
    ensure(x.size() == model.support_features.cols,
           "raw_score_kernel: feature dim ", x.size(), " != model dim ", model.support_features.cols);
    ensure(model.alpha.size() == model.support_features.rows,
           "raw_score_kernel: alpha size ", model.alpha.size(),
           " != support count ", model.support_features.rows);
    double acc = model.bias;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) {
        const double d2 = squared_distance(model.support_features.row(i), x.data(), x.size());
        acc += model.alpha[i] * std::exp(-model.gamma * d2);
    }
    return acc;
}

/// Sigmoid in the two-branch form: exp() is only taken of non-positive
/// arguments, so large |raw| cannot overflow.
inline double risk_score(double raw) {
    ensure(!std::isnan(raw), "risk_score: NaN raw score");
    if (raw >= 0.0) {
        const double z = std::exp(-raw);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(raw);
    return z / (1.0 + z);
}

/// d/draw sigmoid(raw) = s(1-s).
inline double risk_score_derivative(double raw) {
    const double s = risk_score(raw);
    return s * (1.0 - s);
}

/// Threshold rule: the boundary s == t is assigned to class 0.
inline int predict(double score, double threshold) {
    ensure(threshold >= 0.0 && threshold <= 1.0,
           "predict: threshold must be in [0,1], got ", threshold);
    return score > threshold ? 1 : 0;
}

inline std::vector<double> raw_scores(const LinearModel& model, const Matrix& features) {
    ensure(features.cols == model.weights.size(),
           "raw_scores: feature dim ", features.cols, " != model dim ", model.weights.size());
    std::vector<double> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
        double acc = model.bias;
        const double* row = features.row(i);
        for (std::size_t j = 0; j < features.cols; ++j) acc += model.weights[j] * row[j];
        out[i] = acc;
    }
    return out;
}

inline std::vector<double> raw_scores(const KernelModel& model, const Matrix& features) {
    std::vector<double> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i)
        out[i] = raw_score_kernel(model, features.row_copy(i));
    return out;
}

inline std::vector<double> risk_scores(const std::vector<double>& raw) {
    std::vector<double> s(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) s[i] = risk_score(raw[i]);
    return s;
}

/// Symmetric Gram matrix K(X_i, X_j) over the rows of `features`.
inline Matrix rbf_gram(const Matrix& features, double gamma) {
    ensure(gamma > 0.0, "rbf_gram: gamma must be positive, got ", gamma);
    Matrix k(features.rows, features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < features.rows; ++j) {
            const double v =
                std::exp(-gamma * squared_distance(features.row(i), features.row(j), features.cols));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

} // namespace fairdist
