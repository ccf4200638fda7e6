// Command-line front end: train fairness-regularized classifiers, audit
// parity across decision thresholds, and dump tradeoff / risk-distribution
// data as CSV and JSON.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairdist/experiment.hpp"
#include "fairdist/experiment_config.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;   // key=value pairs
    std::string out_dir;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set eta=2");
    cmd->add_option("--out-dir", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "split seed (overrides config)");
}

fairdist::ExperimentConfig load_config(const CommonArgs& args) {
    fairdist::ExperimentConfig cfg = fairdist::parse_config_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        fairdist::ensure<fairdist::ConfigError>(eq != std::string::npos,
                                                "--set expects key=value, got '", kv, "'");
        fairdist::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(args.seed);
        cfg.train.seed = cfg.seed;
    }
    cfg.validate();
    return cfg;
}

fairdist::ParityMode parse_parity(const std::string& s) {
    if (s == "dp") return fairdist::ParityMode::DP;
    if (s == "eo") return fairdist::ParityMode::EO;
    throw fairdist::ConfigError("parity must be 'dp' or 'eo', got '" + s + "'");
}

std::vector<double> parse_eta_list(const std::string& s) {
    std::vector<double> etas;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            etas.push_back(fairdist::parse_double(cur, "eta"));
            cur.clear();
        }
    };
    for (char c : s) {
        if (c == ',') flush();
        else if (c != ' ') cur.push_back(c);
    }
    flush();
    return etas;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"train and audit binary classifiers with risk-distribution fairness regularizers"};
    app.require_subcommand(1);

    CommonArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a model, write model/trace/summary");
    add_common(train_cmd, train_args);

    CommonArgs sweep_args;
    std::string sweep_model, sweep_parity;
    double sweep_tmin = -1.0, sweep_tmax = -1.0;
    std::int64_t sweep_steps = -1;
    auto* sweep_cmd = app.add_subcommand("sweep", "parity vs decision threshold for a trained model");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("-m,--model", sweep_model, "model file from 'train'")->required();
    sweep_cmd->add_option("--parity", sweep_parity, "parity kind: dp or eo");
    sweep_cmd->add_option("--t-min", sweep_tmin, "sweep lower threshold");
    sweep_cmd->add_option("--t-max", sweep_tmax, "sweep upper threshold");
    sweep_cmd->add_option("--steps", sweep_steps, "number of grid points");

    CommonArgs tradeoff_args;
    std::string tradeoff_etas = "0,0.5,1,2,5";
    auto* tradeoff_cmd =
        app.add_subcommand("tradeoff", "accuracy/parity tradeoff across a list of eta values");
    add_common(tradeoff_cmd, tradeoff_args);
    tradeoff_cmd->add_option("--etas", tradeoff_etas, "comma-separated eta values");

    CommonArgs riskdist_args;
    std::string riskdist_model, riskdist_mode;
    std::int64_t riskdist_bins = -1;
    auto* riskdist_cmd =
        app.add_subcommand("riskdist", "per-group risk-score distributions of a trained model");
    add_common(riskdist_cmd, riskdist_args);
    riskdist_cmd->add_option("-m,--model", riskdist_model, "model file from 'train'")->required();
    riskdist_cmd->add_option("--mode", riskdist_mode, "grouping: dp (by A) or eo (by A and Y)");
    riskdist_cmd->add_option("--bins", riskdist_bins, "histogram bin count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) {
            const auto cfg = load_config(train_args);
            const auto run = fairdist::run_train(cfg);
            std::cout << "model:   " << run.model_path << "\n"
                      << "trace:   " << run.trace_path << "\n"
                      << "summary: " << run.summary_path << "\n"
                      << "test accuracy " << run.test_report.accuracy << ", delta_dp "
                      << run.test_report.delta_dp << ", delta_eo " << run.test_report.delta_eo
                      << " at threshold " << run.test_report.threshold << "\n";
        } else if (sweep_cmd->parsed()) {
            auto cfg = load_config(sweep_args);
            if (sweep_tmin >= 0.0) cfg.sweep_min = sweep_tmin;
            if (sweep_tmax >= 0.0) cfg.sweep_max = sweep_tmax;
            if (sweep_steps >= 0) cfg.sweep_steps = static_cast<std::size_t>(sweep_steps);
            cfg.validate();
            fairdist::ParityMode kind = cfg.train.fairness_mode.value_or(fairdist::ParityMode::DP);
            if (!sweep_parity.empty()) kind = parse_parity(sweep_parity);
            const auto run = fairdist::run_sweep(cfg, sweep_model, kind);
            std::cout << "sweep:   " << run.csv_path << "\n"
                      << "summary: " << run.summary_path << "\n"
                      << "interval " << run.sweep.interval << ", std " << run.sweep.stddev << "\n";
        } else if (tradeoff_cmd->parsed()) {
            const auto cfg = load_config(tradeoff_args);
            const auto run = fairdist::run_tradeoff(cfg, parse_eta_list(tradeoff_etas));
            std::cout << "tradeoff: " << run.csv_path << "\n";
            for (const auto& row : run.rows) {
                if (row.ok)
                    std::cout << "  eta " << row.eta << ": accuracy " << row.accuracy << ", delta "
                              << row.delta << "\n";
                else
                    std::cout << "  eta " << row.eta << ": FAILED (" << row.error << ")\n";
            }
        } else if (riskdist_cmd->parsed()) {
            auto cfg = load_config(riskdist_args);
            if (riskdist_bins >= 2) cfg.riskdist_bins = static_cast<std::size_t>(riskdist_bins);
            fairdist::ParityMode mode = cfg.train.fairness_mode.value_or(fairdist::ParityMode::DP);
            if (!riskdist_mode.empty()) mode = parse_parity(riskdist_mode);
            const auto run = fairdist::run_riskdist(cfg, riskdist_model, mode, cfg.riskdist_bins);
            std::cout << "riskdist: " << run.csv_path << "\n"
                      << "moments:  " << run.moments_path << "\n";
        }
    } catch (const fairdist::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
