#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fairdist/common.hpp"

// Slow, independent oracles used by the test suites. Nothing in here shares
// arithmetic with the production paths in the other headers; keeping the two
// implementations apart is what makes the cross-checks meaningful.
namespace fairdist::reference {

/// Exact rectangular-indicator histogram. Bins are half-open
/// [c - w/2, c + w/2); the last bin also takes its upper boundary so every
/// score in [0,1] lands somewhere.
struct HardHistogram {
    std::vector<double> centers;
    double bin_width = 0.0;
    std::vector<double> mass;
    std::vector<std::size_t> counts;
};

inline HardHistogram hard_histogram(const std::vector<double>& scores, std::size_t n_bins) {
    ensure(!scores.empty(), "hard_histogram: empty score set");
    ensure(n_bins >= 1, "hard_histogram: need at least one bin");

    HardHistogram h;
    h.bin_width = 1.0 / static_cast<double>(n_bins);
    h.centers.resize(n_bins);
    h.counts.assign(n_bins, 0);
    for (std::size_t j = 0; j < n_bins; ++j)
        h.centers[j] = (static_cast<double>(j) + 0.5) * h.bin_width;

    for (double s : scores) {
        ensure(s >= 0.0 && s <= 1.0, "hard_histogram: score ", s, " outside [0,1]");
        std::size_t chosen = n_bins - 1;
        for (std::size_t j = 0; j < n_bins; ++j) {
            const double lo = h.centers[j] - 0.5 * h.bin_width;
            const double hi = h.centers[j] + 0.5 * h.bin_width;
            if (s >= lo && s < hi) {
                chosen = j;
                break;
            }
        }
        ++h.counts[chosen];
    }

    h.mass.resize(n_bins);
    for (std::size_t j = 0; j < n_bins; ++j)
        h.mass[j] = static_cast<double>(h.counts[j]) / static_cast<double>(scores.size());
    return h;
}

/// Central finite differences, one coordinate at a time.
inline std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double step) {
    ensure(step > 0.0, "finite_diff: step must be positive");
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double plus = f(x);
        x[i] = saved - step;
        const double minus = f(x);
        x[i] = saved;
        ensure(std::isfinite(plus) && std::isfinite(minus),
               "finite_diff: non-finite function value near coordinate ", i);
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

/// Calder-Verwer scores by literal per-sample counting. Deliberately
/// re-states the threshold rule (boundary to class 0) instead of calling
/// the production predictor.
inline std::pair<double, double> exhaustive_parity(const std::vector<double>& scores,
                                                   const std::vector<int>& labels,
                                                   const std::vector<int>& protected_attr,
                                                   double threshold) {
    ensure(scores.size() == labels.size() && scores.size() == protected_attr.size(),
           "exhaustive_parity: size mismatch");
    ensure(!scores.empty(), "exhaustive_parity: empty input");

    double pos0 = 0, n0 = 0, pos1 = 0, n1 = 0;
    double pos_ay[2][2] = {{0, 0}, {0, 0}};
    double n_ay[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] > threshold ? 1 : 0;
        if (protected_attr[i] == 0) {
            n0 += 1;
            if (pred == 1) pos0 += 1;
        } else {
            n1 += 1;
            if (pred == 1) pos1 += 1;
        }
        n_ay[protected_attr[i]][labels[i]] += 1;
        if (pred == 1) pos_ay[protected_attr[i]][labels[i]] += 1;
    }
    ensure(n0 > 0 && n1 > 0, "exhaustive_parity: empty protected group");
    for (int a = 0; a < 2; ++a)
        for (int y = 0; y < 2; ++y)
            ensure(n_ay[a][y] > 0, "exhaustive_parity: empty group a=", a, ",y=", y);

    const double delta_dp = std::fabs(pos0 / n0 - pos1 / n1);
    const double delta_eo =
        0.5 * (std::fabs(pos_ay[0][0] / n_ay[0][0] - pos_ay[1][0] / n_ay[1][0]) +
               std::fabs(pos_ay[0][1] / n_ay[0][1] - pos_ay[1][1] / n_ay[1][1]));
    return {delta_dp, delta_eo};
}

} // namespace fairdist::reference
