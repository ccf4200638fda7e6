#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairdist/common.hpp"
#include "fairdist/dataset.hpp"
#include "fairdist/model.hpp"

namespace fairdist {

struct GroupRate {
    std::string key;
    int a = 0;
    int y = -1;           // -1 for the marginal P_a rates
    double rate = 0.0;    // positive-prediction rate
    std::size_t count = 0;
};

/// Calder-Verwer parity scores at one threshold, with the per-group rates
/// they were computed from.
struct ParityReport {
    double threshold = 0.5;
    double accuracy = 0.0;
    double delta_dp = 0.0;
    double delta_eo = 0.0;
    std::vector<GroupRate> group_rates;   // P_0, P_1, then P_{a,y} in (a,y) order

    const GroupRate& rate(int a, int y = -1) const {
        for (const auto& r : group_rates)
            if (r.a == a && r.y == y) return r;
        throw Error("parity report: no group a=" + std::to_string(a) + ",y=" + std::to_string(y));
    }
};

struct ParitySweep {
    std::vector<double> thresholds;
    std::vector<double> parity_values;
    std::vector<double> accuracies;
    double interval = 0.0;     // max - min of parity over the grid
    double stddev = 0.0;       // population standard deviation over the grid
    std::size_t excluded_count = 0;
};

inline double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold) {
    ensure(!scores.empty(), "accuracy: empty input");
    ensure(scores.size() == labels.size(), "accuracy: size mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (predict(scores[i], threshold) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

inline ParityReport parity_report(const std::vector<double>& scores,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& protected_attr, double threshold) {
    ensure(!scores.empty(), "parity_report: empty input");
    ensure(scores.size() == labels.size() && scores.size() == protected_attr.size(),
           "parity_report: size mismatch");

    std::size_t pos[2] = {0, 0}, tot[2] = {0, 0};
    std::size_t pos_ay[2][2] = {{0, 0}, {0, 0}}, tot_ay[2][2] = {{0, 0}, {0, 0}};
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int a = protected_attr[i];
        const int y = labels[i];
        const int yhat = predict(scores[i], threshold);
        ++tot[a];
        ++tot_ay[a][y];
        if (yhat == 1) {
            ++pos[a];
            ++pos_ay[a][y];
        }
        if (yhat == y) ++correct;
    }
    for (int a = 0; a < 2; ++a) {
        ensure(tot[a] > 0, "parity_report: empty protected group a=", a);
        for (int y = 0; y < 2; ++y)
            ensure(tot_ay[a][y] > 0, "parity_report: empty group a=", a, ",y=", y);
    }

    ParityReport rep;
    rep.threshold = threshold;
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());

    auto rate = [](std::size_t p, std::size_t t) {
        return static_cast<double>(p) / static_cast<double>(t);
    };
    const double p0 = rate(pos[0], tot[0]);
    const double p1 = rate(pos[1], tot[1]);
    rep.delta_dp = std::abs(p0 - p1);
    rep.delta_eo = 0.5 * (std::abs(rate(pos_ay[0][0], tot_ay[0][0]) - rate(pos_ay[1][0], tot_ay[1][0])) +
                          std::abs(rate(pos_ay[0][1], tot_ay[0][1]) - rate(pos_ay[1][1], tot_ay[1][1])));

    rep.group_rates.push_back({"a=0", 0, -1, p0, tot[0]});
    rep.group_rates.push_back({"a=1", 1, -1, p1, tot[1]});
    for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
            rep.group_rates.push_back({"a=" + std::to_string(a) + ",y=" + std::to_string(y), a, y,
                                       rate(pos_ay[a][y], tot_ay[a][y]), tot_ay[a][y]});
    return rep;
}

/// Inclusive uniform grid; the endpoints are placed exactly.
inline std::vector<double> threshold_grid(double t_min, double t_max, std::size_t steps) {
    ensure(steps >= 2, "threshold grid: need at least 2 steps, got ", steps);
    ensure(t_min < t_max, "threshold grid: t_min must be below t_max");
    ensure(t_min >= 0.0 && t_max <= 1.0, "threshold grid: range must lie in [0,1]");
    std::vector<double> grid(steps);
    for (std::size_t k = 0; k < steps; ++k)
        grid[k] = t_min + (t_max - t_min) * static_cast<double>(k) / static_cast<double>(steps - 1);
    grid.front() = t_min;
    grid.back() = t_max;
    return grid;
}

inline ParitySweep threshold_sweep(const std::vector<double>& scores,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& protected_attr, double t_min,
                                   double t_max, std::size_t steps, ParityMode parity_kind) {
    ParitySweep sweep;
    for (double t : threshold_grid(t_min, t_max, steps)) {
        try {
            const ParityReport rep = parity_report(scores, labels, protected_attr, t);
            sweep.thresholds.push_back(t);
            sweep.parity_values.push_back(parity_kind == ParityMode::DP ? rep.delta_dp
                                                                        : rep.delta_eo);
            sweep.accuracies.push_back(rep.accuracy);
        } catch (const Error&) {
            ++sweep.excluded_count;   // parity undefined at this threshold
        }
    }
    ensure(!sweep.parity_values.empty(), "threshold_sweep: parity undefined at every threshold");

    const auto [lo, hi] = std::minmax_element(sweep.parity_values.begin(), sweep.parity_values.end());
    sweep.interval = *hi - *lo;
    double mean = 0.0;
    for (double v : sweep.parity_values) mean += v;
    mean /= static_cast<double>(sweep.parity_values.size());
    double var = 0.0;
    for (double v : sweep.parity_values) var += (v - mean) * (v - mean);
    sweep.stddev = std::sqrt(var / static_cast<double>(sweep.parity_values.size()));
    return sweep;
}

// ---------------------------------------------------------------------------
// Density bounds: parity at any threshold is capped by the sup-norm gap
// between group risk densities.

/// Piecewise-constant probability density of risk scores on [0,1]: `mass[j]`
/// is the probability in cell [edges[j], edges[j+1]).
struct DiscreteDensity {
    std::vector<double> edges;
    std::vector<double> mass;

    void validate() const {
        ensure(edges.size() >= 2 && mass.size() + 1 == edges.size(),
               "density: need n+1 edges for n cells");
        ensure(std::abs(edges.front()) <= 1e-12 && std::abs(edges.back() - 1.0) <= 1e-12,
               "density: support must span [0,1]");
        double sum = 0.0;
        for (std::size_t j = 0; j < mass.size(); ++j) {
            ensure(edges[j + 1] > edges[j], "density: edges must be strictly increasing");
            ensure(mass[j] >= 0.0, "density: negative mass");
            sum += mass[j];
        }
        ensure(std::abs(sum - 1.0) <= 1e-9, "density: mass sums to ", sum, ", expected 1");
    }

    /// P(s > t), integrating the piecewise-constant density exactly.
    double tail(double t) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < mass.size(); ++j) {
            const double lo = edges[j], hi = edges[j + 1];
            if (t <= lo) acc += mass[j];
            else if (t < hi) acc += mass[j] * (hi - t) / (hi - lo);
        }
        return acc;
    }
};

inline void ensure_shared_support(const DiscreteDensity& d0, const DiscreteDensity& d1) {
    ensure(d0.edges.size() == d1.edges.size(), "bound_check: densities have different cell counts");
    for (std::size_t j = 0; j < d0.edges.size(); ++j)
        ensure(std::abs(d0.edges[j] - d1.edges[j]) <= 1e-12,
               "bound_check: density supports differ at edge ", j);
}

/// max over cells of |f0 - f1| in density units (mass / cell width).
inline double density_sup_gap(const DiscreteDensity& d0, const DiscreteDensity& d1) {
    ensure_shared_support(d0, d1);
    double eps = 0.0;
    for (std::size_t j = 0; j < d0.mass.size(); ++j) {
        const double width = d0.edges[j + 1] - d0.edges[j];
        eps = std::max(eps, std::abs(d0.mass[j] - d1.mass[j]) / width);
    }
    return eps;
}

struct BoundCheck {
    ParityMode mode = ParityMode::DP;
    double epsilon0 = 0.0;              // DP: the single sup-norm gap
    double epsilon1 = 0.0;              // EO: positive-label pair gap
    std::vector<double> thresholds;
    std::vector<double> observed;       // parity from exact tail sums
    std::vector<double> bound;          // eps * min(t, 1-t) (EO: averaged pair)
    std::vector<double> slack;          // bound - observed

    double min_slack() const {
        double m = std::numeric_limits<double>::infinity();
        for (double s : slack) m = std::min(m, s);
        return m;
    }
};

inline BoundCheck bound_check(const DiscreteDensity& dist0, const DiscreteDensity& dist1,
                              const std::vector<double>& t_grid) {
    dist0.validate();
    dist1.validate();
    BoundCheck out;
    out.mode = ParityMode::DP;
    out.epsilon0 = density_sup_gap(dist0, dist1);
    for (double t : t_grid) {
        const double observed = std::abs(dist0.tail(t) - dist1.tail(t));
        const double bound = out.epsilon0 * std::min(t, 1.0 - t);
        out.thresholds.push_back(t);
        out.observed.push_back(observed);
        out.bound.push_back(bound);
        out.slack.push_back(bound - observed);
    }
    return out;
}

/// EO variant over the two label-conditioned pairs: densities of the
/// negative-label groups (a=0 vs a=1), then the positive-label groups.
inline BoundCheck bound_check_eo(const DiscreteDensity& dist0_neg, const DiscreteDensity& dist1_neg,
                                 const DiscreteDensity& dist0_pos, const DiscreteDensity& dist1_pos,
                                 const std::vector<double>& t_grid) {
    dist0_neg.validate();
    dist1_neg.validate();
    dist0_pos.validate();
    dist1_pos.validate();
    BoundCheck out;
    out.mode = ParityMode::EO;
    out.epsilon0 = density_sup_gap(dist0_neg, dist1_neg);
    out.epsilon1 = density_sup_gap(dist0_pos, dist1_pos);
    for (double t : t_grid) {
        const double observed = 0.5 * (std::abs(dist0_neg.tail(t) - dist1_neg.tail(t)) +
                                       std::abs(dist0_pos.tail(t) - dist1_pos.tail(t)));
        const double bound = 0.5 * (out.epsilon0 + out.epsilon1) * std::min(t, 1.0 - t);
        out.thresholds.push_back(t);
        out.observed.push_back(observed);
        out.bound.push_back(bound);
        out.slack.push_back(bound - observed);
    }
    return out;
}

/// Empirical risk density on a uniform cell grid, for bound checks against
/// real score samples. Binning is explicit because the sup-norm estimate
/// depends on it.
inline DiscreteDensity empirical_density(const std::vector<double>& scores, std::size_t n_cells = 50) {
    ensure(!scores.empty(), "empirical_density: empty score set");
    ensure(n_cells >= 1, "empirical_density: need at least one cell");
    DiscreteDensity d;
    d.edges.resize(n_cells + 1);
    for (std::size_t j = 0; j <= n_cells; ++j)
        d.edges[j] = static_cast<double>(j) / static_cast<double>(n_cells);
    d.mass.assign(n_cells, 0.0);
    for (double s : scores) {
        ensure(s >= 0.0 && s <= 1.0, "empirical_density: score ", s, " outside [0,1]");
        std::size_t j = static_cast<std::size_t>(s * static_cast<double>(n_cells));
        if (j >= n_cells) j = n_cells - 1;
        d.mass[j] += 1.0;
    }
    for (auto& m : d.mass) m /= static_cast<double>(scores.size());
    return d;
}

} // namespace fairdist
