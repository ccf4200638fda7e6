#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/dataset.hpp"
#include "fairdist/fairness.hpp"
#include "fairdist/model.hpp"

namespace fairdist {

enum class ModelKind { LR, LSVM, KSVM };

inline const char* to_string(ModelKind k) {
    switch (k) {
    case ModelKind::LR: return "lr";
    case ModelKind::LSVM: return "lsvm";
    default: return "ksvm";
    }
}

struct TrainConfig {
    ModelKind model_kind = ModelKind::LR;
    std::optional<ParityMode> fairness_mode;    // nullopt = unconstrained
    EqualizationMethod method = EqualizationMethod::GA;
    double eta = 0.0;
    std::optional<double> lambda;               // SVM only; default 1/(10*M)
    double rbf_gamma = 0.5;                     // KSVM only
    double lr_start = 0.1;
    double lr_end = 0.0001;
    double momentum = 0.9;
    std::size_t max_iters = 2000;
    std::uint64_t seed = 42;                    // recorded for provenance; the loop is deterministic
    HaParams ha;

    void validate() const {
        ensure<ConfigError>(eta >= 0.0, "train config: eta must be non-negative, got ", eta);
        ensure<ConfigError>(lr_start >= lr_end && lr_end > 0.0,
                            "train config: need lr_start >= lr_end > 0, got ", lr_start, " .. ", lr_end);
        ensure<ConfigError>(momentum >= 0.0 && momentum < 1.0,
                            "train config: momentum must be in [0,1), got ", momentum);
        ensure<ConfigError>(max_iters >= 1, "train config: max_iters must be at least 1");
        ensure<ConfigError>(rbf_gamma > 0.0, "train config: rbf_gamma must be positive");
        if (lambda) ensure<ConfigError>(*lambda >= 0.0, "train config: lambda must be non-negative");
    }

    double resolved_lambda(std::size_t n_samples) const {
        return lambda ? *lambda : 1.0 / (10.0 * static_cast<double>(n_samples));
    }

    bool fairness_active() const { return fairness_mode.has_value() && eta > 0.0; }
};

/// One loss evaluation: value split into the model objective and the scaled
/// fairness term, plus the (sub)gradient over the trainable parameters
/// (weights-then-bias, or alpha-then-bias for the kernel machine).
struct LossEval {
    double total = 0.0;
    double data_term = 0.0;
    double fairness_term = 0.0;     // eta * E_f
    std::vector<double> grad_params;
    double grad_bias = 0.0;
};

struct LossTraceEntry {
    double total = 0.0;
    double data_term = 0.0;
    double fairness_term = 0.0;
};

struct TrainReport {
    std::vector<LossTraceEntry> loss_trace;
    std::variant<LinearModel, KernelModel> final_model;
    std::size_t iterations_run = 0;

    const LinearModel& linear() const { return std::get<LinearModel>(final_model); }
    const KernelModel& kernel() const { return std::get<KernelModel>(final_model); }
};

/// Thrown when a loss goes non-finite; carries the trace up to that point.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::string msg, std::vector<LossTraceEntry> trace)
        : Error(std::move(msg)), partial_trace(std::move(trace)) {}
    std::vector<LossTraceEntry> partial_trace;
};

namespace detail {

inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

/// eta * E_f and its per-sample raw-score gradient (scaled by eta), or zeros
/// when the regularizer is off. eta == 0 must not perturb the baseline loss,
/// so the term is skipped entirely rather than multiplied by zero.
inline std::pair<double, std::vector<double>> fairness_term(
    const std::vector<double>& raw, const GroupPartition* partition, const TrainConfig& cfg) {
    if (!cfg.fairness_active() || partition == nullptr)
        return {0.0, std::vector<double>(raw.size(), 0.0)};
    RegularizerValue reg = regularizer(raw, *partition, cfg.method, cfg.ha);
    std::vector<double> grad(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) grad[i] = cfg.eta * reg.gradient[i];
    return {cfg.eta * reg.value, std::move(grad)};
}

inline void check_finite(double loss, const char* what) {
    ensure(std::isfinite(loss), what, ": non-finite loss (divergence)");
}

} // namespace detail

/// Cross-entropy loss of the risk scores plus the fairness term.
inline LossEval loss_lr(const LinearModel& model, const Dataset& ds,
                        const GroupPartition* partition, const TrainConfig& cfg) {
    const std::size_t m = ds.size();
    ensure(m > 0, "loss_lr: empty dataset");
    const double inv_m = 1.0 / static_cast<double>(m);
    const std::vector<double> raw = raw_scores(model, ds.features);

    LossEval out;
    out.grad_params.assign(model.dim(), 0.0);

    auto [fair_value, fair_grad] = detail::fairness_term(raw, partition, cfg);
    out.fairness_term = fair_value;

    for (std::size_t i = 0; i < m; ++i) {
        const double y = static_cast<double>(ds.labels[i]);
        // y*log(1+e^-g) + (1-y)*log(1+e^g), evaluated without overflow
        out.data_term += inv_m * (y * detail::softplus(-raw[i]) + (1.0 - y) * detail::softplus(raw[i]));
        const double coeff = (risk_score(raw[i]) - y) * inv_m + fair_grad[i];
        const double* x = ds.features.row(i);
        for (std::size_t j = 0; j < model.dim(); ++j) out.grad_params[j] += coeff * x[j];
        out.grad_bias += coeff;
    }
    out.total = out.data_term + out.fairness_term;
    detail::check_finite(out.total, "loss_lr");
    return out;
}

/// Regularized hinge loss (labels mapped to -1/+1) plus the fairness term.
/// The hinge subgradient at the kink is taken as 0.
inline LossEval loss_lsvm(const LinearModel& model, const Dataset& ds,
                          const GroupPartition* partition, const TrainConfig& cfg) {
    const std::size_t m = ds.size();
    ensure(m > 0, "loss_lsvm: empty dataset");
    const double inv_m = 1.0 / static_cast<double>(m);
    const double lambda = cfg.resolved_lambda(m);
    const std::vector<double> raw = raw_scores(model, ds.features);

    LossEval out;
    out.grad_params.assign(model.dim(), 0.0);

    auto [fair_value, fair_grad] = detail::fairness_term(raw, partition, cfg);
    out.fairness_term = fair_value;

    double hinge_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double y_pm = ds.labels[i] == 1 ? 1.0 : -1.0;
        const double margin = 1.0 - y_pm * raw[i];
        double coeff = fair_grad[i];
        if (margin > 0.0) {
            hinge_sum += margin;
            coeff -= y_pm * inv_m;
        }
        const double* x = ds.features.row(i);
        for (std::size_t j = 0; j < model.dim(); ++j) out.grad_params[j] += coeff * x[j];
        out.grad_bias += coeff;
    }

    double w_norm2 = 0.0;
    for (std::size_t j = 0; j < model.dim(); ++j) {
        w_norm2 += model.weights[j] * model.weights[j];
        out.grad_params[j] += lambda * model.weights[j];
    }
    out.data_term = 0.5 * lambda * w_norm2 + hinge_sum * inv_m;
    out.total = out.data_term + out.fairness_term;
    detail::check_finite(out.total, "loss_lsvm");
    return out;
}

/// Kernel hinge loss over alpha with a precomputed Gram matrix. Raw scores
/// (and through them the fairness term) come from the kernel trick:
/// g(X_i) = (K alpha)_i + b.
inline LossEval loss_ksvm(const std::vector<double>& alpha, double bias, const Dataset& ds,
                          const GroupPartition* partition, const TrainConfig& cfg,
                          const Matrix& gram) {
    const std::size_t m = ds.size();
    ensure(m > 0, "loss_ksvm: empty dataset");
    ensure(gram.rows == m && gram.cols == m, "loss_ksvm: gram is ", gram.rows, "x", gram.cols,
           ", expected ", m, "x", m);
    ensure(alpha.size() == m, "loss_ksvm: alpha size ", alpha.size(), " != ", m);
    const double inv_m = 1.0 / static_cast<double>(m);
    const double lambda = cfg.resolved_lambda(m);

    std::vector<double> k_alpha(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = gram.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * alpha[j];
        k_alpha[i] = acc;
    }
    std::vector<double> raw(m);
    for (std::size_t i = 0; i < m; ++i) raw[i] = k_alpha[i] + bias;

    LossEval out;
    auto [fair_value, fair_grad] = detail::fairness_term(raw, partition, cfg);
    out.fairness_term = fair_value;

    // per-sample d(loss)/d(raw score); alpha gradient follows as K * coeff
    std::vector<double> coeff(m);
    double hinge_sum = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double y_pm = ds.labels[i] == 1 ? 1.0 : -1.0;
        const double margin = 1.0 - y_pm * raw[i];
        coeff[i] = fair_grad[i];
        if (margin > 0.0) {
            hinge_sum += margin;
            coeff[i] -= y_pm * inv_m;
        }
        quad += alpha[i] * k_alpha[i];
        out.grad_bias += coeff[i];
    }

    out.grad_params.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = gram.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * coeff[j];
        out.grad_params[i] = acc + lambda * k_alpha[i];
    }

    out.data_term = 0.5 * lambda * quad + hinge_sum * inv_m;
    out.total = out.data_term + out.fairness_term;
    detail::check_finite(out.total, "loss_ksvm");
    return out;
}

// ---------------------------------------------------------------------------
// Optimizer: full-batch descent with momentum and geometric learning-rate
// decay, zero-initialized parameters. Strictly sequential, so repeated runs
// are bit-identical.

namespace detail {

inline double learning_rate(const TrainConfig& cfg, std::size_t iter) {
    const double ratio = cfg.lr_end / cfg.lr_start;
    return cfg.lr_start *
           std::pow(ratio, static_cast<double>(iter) / static_cast<double>(cfg.max_iters));
}

template <typename LossFn>
std::pair<std::vector<LossTraceEntry>, std::pair<std::vector<double>, double>>
descend(const TrainConfig& cfg, std::size_t n_params, LossFn&& eval) {
    std::vector<double> params(n_params, 0.0);
    double bias = 0.0;
    std::vector<double> velocity(n_params, 0.0);
    double velocity_bias = 0.0;
    std::vector<LossTraceEntry> trace;
    trace.reserve(cfg.max_iters);

    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        LossEval loss;
        try {
            loss = eval(params, bias);
        } catch (const Error& e) {
            throw TrainingDiverged(std::string("training diverged at iteration ") +
                                       std::to_string(k) + ": " + e.what(),
                                   std::move(trace));
        }
        trace.push_back({loss.total, loss.data_term, loss.fairness_term});
        const double lr = learning_rate(cfg, k);
        for (std::size_t j = 0; j < n_params; ++j) {
            velocity[j] = cfg.momentum * velocity[j] - lr * loss.grad_params[j];
            params[j] += velocity[j];
        }
        velocity_bias = cfg.momentum * velocity_bias - lr * loss.grad_bias;
        bias += velocity_bias;
    }
    return {std::move(trace), {std::move(params), bias}};
}

} // namespace detail

/// Kernel-machine training against a caller-supplied Gram matrix. Exposed
/// separately so other kernels can be plugged in for evaluation.
inline TrainReport train_ksvm(const Dataset& ds, const TrainConfig& cfg, const Matrix& gram) {
    cfg.validate();
    const GroupPartition partition =
        cfg.fairness_mode ? partition_groups(ds, *cfg.fairness_mode) : GroupPartition{};
    const GroupPartition* part = cfg.fairness_mode ? &partition : nullptr;

    auto [trace, final_params] =
        detail::descend(cfg, ds.size(), [&](const std::vector<double>& alpha, double bias) {
            return loss_ksvm(alpha, bias, ds, part, cfg, gram);
        });

    KernelModel model;
    model.alpha = std::move(final_params.first);
    model.bias = final_params.second;
    model.support_features = ds.features;
    model.gamma = cfg.rbf_gamma;
    model.norm_stats = ds.norm_stats;

    TrainReport report;
    report.loss_trace = std::move(trace);
    report.iterations_run = report.loss_trace.size();
    report.final_model = std::move(model);
    return report;
}

inline TrainReport train(const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ensure(ds.size() > 0, "train: empty dataset");

    if (cfg.model_kind == ModelKind::KSVM)
        return train_ksvm(ds, cfg, rbf_gram(ds.features, cfg.rbf_gamma));

    const GroupPartition partition =
        cfg.fairness_mode ? partition_groups(ds, *cfg.fairness_mode) : GroupPartition{};
    const GroupPartition* part = cfg.fairness_mode ? &partition : nullptr;

    auto eval = [&](const std::vector<double>& weights, double bias) {
        LinearModel probe;
        probe.weights = weights;
        probe.bias = bias;
        return cfg.model_kind == ModelKind::LR ? loss_lr(probe, ds, part, cfg)
                                               : loss_lsvm(probe, ds, part, cfg);
    };
    auto [trace, final_params] = detail::descend(cfg, ds.features.cols, eval);

    LinearModel model;
    model.weights = std::move(final_params.first);
    model.bias = final_params.second;
    model.norm_stats = ds.norm_stats;

    TrainReport report;
    report.loss_trace = std::move(trace);
    report.iterations_run = report.loss_trace.size();
    report.final_model = std::move(model);
    return report;
}

} // namespace fairdist
