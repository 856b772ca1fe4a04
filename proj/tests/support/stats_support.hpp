#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace petition::fixtures {

/// Kruskal-Wallis H from pairwise rank counting and the variance form
/// (N - 1) sum n_g (rbar_g - rbar)^2 / sum (r - rbar)^2, which is the
/// tie-corrected statistic without any closed-form correction term.
inline double kw_rank_oracle(const std::vector<std::vector<double>> &groups) {
    std::vector<double> all;
    for (const auto &g : groups) all.insert(all.end(), g.begin(), g.end());
    const auto rank_of = [&](double x) {
        double less = 0, equal = 0;
        for (double y : all) {
            if (y < x) less += 1;
            if (y == x) equal += 1;
        }
        return less + (equal + 1.0) / 2.0;
    };
    const double n = static_cast<double>(all.size());
    const double mean_rank = (n + 1.0) / 2.0;
    double between = 0.0, total = 0.0;
    for (const auto &g : groups) {
        double s = 0.0;
        for (double x : g) {
            const double r = rank_of(x);
            s += r;
            total += (r - mean_rank) * (r - mean_rank);
        }
        const double gm = s / static_cast<double>(g.size());
        between += static_cast<double>(g.size()) * (gm - mean_rank) * (gm - mean_rank);
    }
    return total == 0.0 ? 0.0 : (n - 1.0) * between / total;
}

/// Per-class F1 by direct counting over the label pairs.
inline std::vector<double> fscore_oracle(const std::vector<std::size_t> &pred, const std::vector<std::size_t> &truth,
                                         std::size_t classes) {
    std::vector<double> out(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) tp += 1;
            if (pred[i] == c && truth[i] != c) fp += 1;
            if (pred[i] != c && truth[i] == c) fn += 1;
        }
        out[c] = tp + fp + fn == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    }
    return out;
}

/// Simpson integration of the F(d1, d2) density from x to a large bound,
/// after the substitution t = x + u / (1 - u).
inline double f_sf_quadrature(double x, int d1, int d2) {
    const double a = d1 / 2.0, b = d2 / 2.0;
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const auto density = [&](double t) {
        if (t <= 0) return 0.0;
        return std::exp(a * std::log(d1 * t) + b * std::log(static_cast<double>(d2)) -
                        (a + b) * std::log(d1 * t + d2) - std::log(t) - log_beta);
    };
    const int steps = 200000;
    const double h = 1.0 / steps;
    double s = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double u = i * h;
        double v = 0.0;
        if (u < 1.0) v = density(x + u / (1.0 - u)) / ((1.0 - u) * (1.0 - u));
        s += (i == 0 || i == steps ? 1 : (i % 2 ? 4 : 2)) * v;
    }
    return s * h / 3.0;
}

}  // namespace petition::fixtures
