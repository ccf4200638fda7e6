#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdist/common.hpp"
#include "fairdist/csv.hpp"
#include "fairdist/dataset.hpp"
#include "fairdist/experiment_config.hpp"
#include "fairdist/fairness.hpp"
#include "fairdist/metrics.hpp"
#include "fairdist/model_io.hpp"
#include "fairdist/training.hpp"

// Command implementations behind the CLI. Everything here writes plain CSV
// and JSON; no timestamps, so identical configs produce byte-identical
// outputs.
namespace fairdist {

struct PreparedData {
    Dataset train;
    Dataset test;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    const RawTable raw = load_csv(cfg.dataset_path, cfg.schema);
    const Dataset full = preprocess(raw, cfg.schema);
    auto [train, test] = split(full, cfg.split_fraction, cfg.seed);
    return {std::move(train), std::move(test)};
}

namespace detail {

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    ensure(out.good(), "cannot open output file '", path, "'");
    return out;
}

inline void write_loss_trace(const std::string& path, const std::vector<LossTraceEntry>& trace) {
    auto out = open_out(path);
    out << "iter,total,data,fairness\n";
    for (std::size_t k = 0; k < trace.size(); ++k)
        out << k << ',' << format_double(trace[k].total) << ',' << format_double(trace[k].data_term)
            << ',' << format_double(trace[k].fairness_term) << '\n';
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json summary_json(const ParityReport& rep) {
    nlohmann::json j;
    j["accuracy"] = rep.accuracy;
    j["delta_dp"] = rep.delta_dp;
    j["delta_eo"] = rep.delta_eo;
    j["threshold"] = rep.threshold;
    return j;
}

/// Plain counting histogram of risk scores on a uniform [0,1] grid; the
/// exported risk-distribution data.
inline std::vector<double> counting_histogram(const std::vector<double>& scores,
                                              std::size_t n_bins) {
    std::vector<double> mass(n_bins, 0.0);
    for (double s : scores) {
        std::size_t j = static_cast<std::size_t>(s * static_cast<double>(n_bins));
        if (j >= n_bins) j = n_bins - 1;
        mass[j] += 1.0;
    }
    for (auto& m : mass) m /= static_cast<double>(scores.size());
    return mass;
}

} // namespace detail

// ---------------------------------------------------------------------------
// train

struct TrainRun {
    TrainReport report;
    ParityReport test_report;
    std::string model_path;
    std::string trace_path;
    std::string summary_path;
};

inline TrainRun run_train(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    const std::string trace_path = detail::out_path(cfg, "loss_trace.csv");

    TrainRun run;
    try {
        run.report = train(data.train, cfg.train);
    } catch (const TrainingDiverged& e) {
        detail::write_loss_trace(trace_path, e.partial_trace);   // keep the partial trace
        throw;
    }

    run.model_path = detail::out_path(cfg, "model.txt");
    run.trace_path = trace_path;
    run.summary_path = detail::out_path(cfg, "summary.json");

    save_model(run.report.final_model, run.model_path);
    detail::write_loss_trace(trace_path, run.report.loss_trace);

    const std::vector<double> scores = risk_scores(raw_scores(run.report.final_model, data.test.features));
    run.test_report = parity_report(scores, data.test.labels, data.test.protected_attr, cfg.threshold);
    detail::write_json(run.summary_path, detail::summary_json(run.test_report));
    return run;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRun {
    ParitySweep sweep;
    ParityReport default_report;
    std::string csv_path;
    std::string summary_path;
};

inline SweepRun run_sweep(const ExperimentConfig& cfg, const std::string& model_path,
                          ParityMode parity_kind) {
    PreparedData data = prepare_data(cfg);
    const AnyModel model = load_model(model_path);
    const std::vector<double> scores = risk_scores(raw_scores(model, data.test.features));

    SweepRun run;
    run.sweep = threshold_sweep(scores, data.test.labels, data.test.protected_attr, cfg.sweep_min,
                                cfg.sweep_max, cfg.sweep_steps, parity_kind);
    run.default_report =
        parity_report(scores, data.test.labels, data.test.protected_attr, cfg.threshold);

    run.csv_path = detail::out_path(cfg, "sweep.csv");
    auto out = detail::open_out(run.csv_path);
    out << "threshold,parity,accuracy\n";
    for (std::size_t k = 0; k < run.sweep.thresholds.size(); ++k)
        out << format_double(run.sweep.thresholds[k]) << ',' << format_double(run.sweep.parity_values[k])
            << ',' << format_double(run.sweep.accuracies[k]) << '\n';
    out.close();

    nlohmann::json j = detail::summary_json(run.default_report);
    j["parity_kind"] = parity_kind == ParityMode::DP ? "dp" : "eo";
    j["interval"] = run.sweep.interval;
    j["std"] = run.sweep.stddev;
    j["excluded_thresholds"] = run.sweep.excluded_count;
    run.summary_path = detail::out_path(cfg, "sweep_summary.json");
    detail::write_json(run.summary_path, j);
    return run;
}

// ---------------------------------------------------------------------------
// tradeoff

struct TradeoffRow {
    double eta = 0.0;
    bool ok = false;
    double accuracy = 0.0;
    double delta = 0.0;       // delta_dp or delta_eo per the config's fairness mode
    std::string error;
};

struct TradeoffRun {
    std::vector<TradeoffRow> rows;
    std::string csv_path;
};

inline TradeoffRun run_tradeoff(const ExperimentConfig& cfg, std::vector<double> etas) {
    cfg.validate();
    ensure<ConfigError>(!etas.empty(), "tradeoff: empty eta list");
    ensure<ConfigError>(cfg.train.fairness_mode.has_value(),
                        "tradeoff: config must set fairness = dp or eo");
    std::sort(etas.begin(), etas.end());

    PreparedData data = prepare_data(cfg);
    const ParityMode mode = *cfg.train.fairness_mode;

    TradeoffRun run;
    for (double eta : etas) {
        TradeoffRow row;
        row.eta = eta;
        try {
            TrainConfig tc = cfg.train;
            tc.eta = eta;
            const TrainReport report = train(data.train, tc);
            const std::vector<double> scores =
                risk_scores(raw_scores(report.final_model, data.test.features));
            const ParityReport rep =
                parity_report(scores, data.test.labels, data.test.protected_attr, cfg.threshold);
            row.ok = true;
            row.accuracy = rep.accuracy;
            row.delta = mode == ParityMode::DP ? rep.delta_dp : rep.delta_eo;
        } catch (const Error& e) {
            row.error = e.what();   // keep going; emit the row as failed
        }
        run.rows.push_back(std::move(row));
    }

    run.csv_path = detail::out_path(cfg, "tradeoff.csv");
    auto out = detail::open_out(run.csv_path);
    out << "eta,accuracy,delta,status\n";
    for (const auto& row : run.rows) {
        out << format_double(row.eta) << ',';
        if (row.ok)
            out << format_double(row.accuracy) << ',' << format_double(row.delta) << ",ok\n";
        else
            out << ",,failed\n";
    }
    return run;
}

// ---------------------------------------------------------------------------
// riskdist

struct RiskDistRun {
    std::string csv_path;
    std::string moments_path;
};

/// Per-group risk-score histograms (and raw-score Gaussian moments) of the
/// test split, for distribution plots.
inline RiskDistRun run_riskdist(const ExperimentConfig& cfg, const std::string& model_path,
                                ParityMode mode, std::size_t n_bins) {
    ensure<ConfigError>(n_bins >= 2, "riskdist: need at least 2 bins");
    PreparedData data = prepare_data(cfg);
    const AnyModel model = load_model(model_path);
    const std::vector<double> raw = raw_scores(model, data.test.features);
    const std::vector<double> scores = risk_scores(raw);
    const GroupPartition part = partition_groups(data.test, mode);

    RiskDistRun run;
    run.csv_path = detail::out_path(cfg, "riskdist.csv");
    auto out = detail::open_out(run.csv_path);
    csv::write_row(out, {"group", "bin_center", "mass"});
    for (const auto& group : part.groups) {
        std::vector<double> group_scores;
        for (auto i : group.indices) group_scores.push_back(scores[i]);
        const auto mass = detail::counting_histogram(group_scores, n_bins);
        for (std::size_t j = 0; j < n_bins; ++j) {
            const double center = (static_cast<double>(j) + 0.5) / static_cast<double>(n_bins);
            // EO group keys contain a comma, so rows go through the quoting writer
            csv::write_row(out, {group.key(), format_double(center), format_double(mass[j])});
        }
    }
    out.close();

    run.moments_path = detail::out_path(cfg, "riskdist_moments.csv");
    auto mout = detail::open_out(run.moments_path);
    csv::write_row(mout, {"group", "mu", "var"});
    for (const auto& group : part.groups) {
        std::vector<double> group_raw;
        for (auto i : group.indices) group_raw.push_back(raw[i]);
        const GaussianMoments m = gaussian_moments(group_raw);
        csv::write_row(mout, {group.key(), format_double(m.mu), format_double(m.var)});
    }
    return run;
}

} // namespace fairdist
