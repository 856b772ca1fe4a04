#include "petition/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "petition/errors.hpp"

namespace petition::eval {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth, const char *what) {
    if (pred.size() != truth.size()) {
        throw ValidationError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions for " +
                              std::to_string(truth.size()) + " targets");
    }
    if (pred.empty()) throw ValidationError(std::string(what) + ": empty input");
}

void check_edges(std::span<const double> edges) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!std::isfinite(edges[i]) || (i > 0 && !(edges[i] > edges[i - 1]))) {
            throw ValidationError("bin edges must be finite and strictly increasing");
        }
    }
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth, "mae");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

MapeResult mape(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth, "mape");
    MapeResult r;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 0.0) {
            ++r.excluded;
            continue;
        }
        sum += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
        ++used;
    }
    r.value = used == 0 ? 0.0 : 100.0 * sum / static_cast<double>(used);
    return r;
}

std::size_t bin_index(double count, std::span<const double> edges) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), count) - edges.begin());
}

BinScores bin_fscore(std::span<const double> pred_counts, std::span<const double> true_counts,
                     std::span<const double> edges) {
    check_pair(pred_counts, true_counts, "bin_fscore");
    check_edges(edges);
    const std::size_t k = edges.size() + 1;
    BinScores s;
    s.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < pred_counts.size(); ++i) {
        ++s.confusion[bin_index(true_counts[i], edges)][bin_index(pred_counts[i], edges)];
    }
    s.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t predicted = 0, actual = 0;
        for (std::size_t j = 0; j < k; ++j) {
            predicted += s.confusion[j][c];
            actual += s.confusion[c][j];
        }
        const double tp = static_cast<double>(s.confusion[c][c]);
        const double denom = static_cast<double>(predicted + actual);
        s.per_class[c] = denom == 0.0 ? 0.0 : 2.0 * tp / denom;
    }
    s.macro = std::accumulate(s.per_class.begin(), s.per_class.end(), 0.0) / static_cast<double>(k);
    return s;
}

std::vector<double> fscore_edges(const corpus::OrdinalScheme &scheme) {
    if (scheme == corpus::OrdinalScheme::us()) return {100000.0};
    return {10000.0, 100000.0};
}

EvalReport evaluate(std::span<const double> pred_log, std::span<const double> truth_log,
                    std::span<const double> pred_counts, std::span<const double> true_counts,
                    std::span<const double> edges, MetricSpace space) {
    EvalReport r;
    r.space = space;
    r.n = truth_log.size();
    const bool raw = space == MetricSpace::Raw;
    r.mae = mae(raw ? pred_counts : pred_log, raw ? true_counts : truth_log);
    const auto m = mape(raw ? pred_counts : pred_log, raw ? true_counts : truth_log);
    r.mape = m.value;
    r.mape_excluded = m.excluded;
    const auto f = bin_fscore(pred_counts, true_counts, edges);
    r.per_bin_f = f.per_class;
    r.macro_f = f.macro;
    r.bin_edges.assign(edges.begin(), edges.end());
    return r;
}

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

KwResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw ValidationError("kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    for (const auto &g : groups) {
        if (g.empty()) throw ValidationError("kruskal_wallis: empty group");
        for (const double v : g) {
            if (std::isnan(v)) throw ValidationError("kruskal_wallis: NaN value");
            pooled.push_back(v);
        }
    }
    const auto n_total = static_cast<double>(pooled.size());
    if (pooled.size() < 3) throw ValidationError("kruskal_wallis: need at least 3 observations");

    const auto ranks = midranks(pooled);
    const double centre = 0.5 * (n_total + 1.0);
    double between = 0.0;
    std::size_t offset = 0;
    for (const auto &g : groups) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) sum += ranks[offset + i];
        offset += g.size();
        const double mean = sum / static_cast<double>(g.size());
        between += static_cast<double>(g.size()) * (mean - centre) * (mean - centre);
    }

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }

    KwResult r;
    r.df = static_cast<int>(groups.size()) - 1;
    r.tie_corrected = ties > 0.0;
    const double correction = 1.0 - ties / (n_total * n_total * n_total - n_total);
    if (correction <= 0.0) {
        r.h = 0.0;
        r.p = 1.0;
        return r;
    }
    r.h = 12.0 / (n_total * (n_total + 1.0)) * between / correction;
    r.p = chi2_sf(r.h, r.df);
    return r;
}

std::string stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

DependencyResult dependency_regression(std::span<const std::vector<double>> hidden, std::span<const double> response,
                                       std::string name) {
    const std::size_t n = hidden.size();
    if (n != response.size()) throw ValidationError("dependency_regression: hidden/response row mismatch");
    if (n == 0) throw ValidationError("dependency_regression: no rows");
    const std::size_t d = hidden.front().size();
    if (d == 0) throw ValidationError("dependency_regression: empty hidden representation");
    if (n <= d + 1) {
        throw ValidationError("dependency_regression: need more than d + 1 = " + std::to_string(d + 1) + " rows, got " +
                              std::to_string(n));
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (hidden[i].size() != d) throw ValidationError("dependency_regression: ragged hidden matrix");
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hidden[i][j];
        y(static_cast<Eigen::Index>(i)) = response[i];
    }
    if (!x.allFinite() || !y.allFinite()) throw ValidationError("dependency_regression: non-finite input");

    // Centring absorbs the intercept.
    x.rowwise() -= x.colwise().mean();
    const double y_scale = y.cwiseAbs().maxCoeff();
    y.array() -= y.mean();

    DependencyResult r;
    r.name = std::move(name);
    const double sst = y.squaredNorm();
    const double eps = std::numeric_limits<double>::epsilon();
    if (sst <= static_cast<double>(n) * (16.0 * eps * y_scale) * (16.0 * eps * y_scale)) {
        r.df1 = static_cast<int>(d);
        r.df2 = static_cast<int>(n - d - 1);
        return r;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const auto rank = static_cast<std::size_t>(qr.rank());
    Eigen::VectorXd beta;
    if (rank == d) {
        beta = qr.solve(y);
    } else {
        r.ridge_fallback = true;
        Eigen::MatrixXd gram = x.transpose() * x;
        gram.diagonal().array() += 1e-6;
        beta = gram.ldlt().solve(x.transpose() * y);
    }
    const std::size_t df1 = std::max<std::size_t>(rank, 1);
    r.df1 = static_cast<int>(df1);
    r.df2 = static_cast<int>(n - df1 - 1);

    const double sse = (y - x * beta).squaredNorm();
    r.r2 = std::clamp(1.0 - sse / sst, 0.0, 1.0);
    if (r.r2 >= 1.0) {
        r.f_stat = std::numeric_limits<double>::infinity();
        r.p_hidden = 0.0;
        return r;
    }
    r.f_stat = (r.r2 / r.df1) / ((1.0 - r.r2) / r.df2);
    r.p_hidden = f_sf(r.f_stat, r.df1, r.df2);
    return r;
}

std::vector<DependencyResult> dependency_analysis(std::span<const std::vector<double>> hidden,
                                                  std::span<const std::vector<double>> features,
                                                  std::span<const std::string> names) {
    if (hidden.size() != features.size()) throw ValidationError("dependency_analysis: hidden/feature row mismatch");
    const std::size_t m = names.size();
    std::vector<DependencyResult> out;
    out.reserve(m);
    std::vector<double> column(features.size());
    for (std::size_t f = 0; f < m; ++f) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].size() != m) throw ValidationError("dependency_analysis: feature row width mismatch");
            column[i] = features[i][f];
        }
        out.push_back(dependency_regression(hidden, column, names[f]));
    }
    return out;
}

std::vector<SignificanceRow> feature_significance_table(std::span<const std::vector<double>> features,
                                                        std::span<const std::int64_t> counts,
                                                        const corpus::OrdinalScheme &scheme,
                                                        std::span<const std::string> names) {
    if (features.size() != counts.size()) throw ValidationError("feature_significance_table: row/count mismatch");
    std::vector<std::size_t> level(counts.size());
    std::vector<std::size_t> group_size(scheme.size() + 1, 0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        level[i] = corpus::ordinal_level(scheme, counts[i]);
        ++group_size[level[i]];
    }
    std::vector<std::size_t> slot(group_size.size(), 0);
    std::size_t used = 0;
    for (std::size_t g = 0; g < group_size.size(); ++g) {
        if (group_size[g] > 0) slot[g] = used++;
    }

    std::vector<SignificanceRow> out;
    for (std::size_t f = 0; f < names.size(); ++f) {
        std::vector<std::vector<double>> groups(used);
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].size() != names.size()) throw ValidationError("feature_significance_table: ragged rows");
            groups[slot[level[i]]].push_back(features[i][f]);
        }
        SignificanceRow row;
        row.name = names[f];
        row.groups_used = used;
        row.groups_dropped = group_size.size() - used;
        if (used >= 2 && features.size() >= 3) {
            row.kw = kruskal_wallis(groups);
        } else {
            row.kw.df = static_cast<int>(used) - 1;
        }
        row.stars = stars(row.kw.p);
        out.push_back(std::move(row));
    }
    return out;
}

std::string fixed(double value, int digits) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

namespace {

std::string full_precision(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace

void add_report(Metrics &out, const std::string &prefix, const EvalReport &report) {
    out.emplace_back(prefix + ".n", std::to_string(report.n));
    out.emplace_back(prefix + ".space", report.space == MetricSpace::Log ? "log" : "raw");
    out.emplace_back(prefix + ".mae", full_precision(report.mae));
    out.emplace_back(prefix + ".mape", full_precision(report.mape));
    out.emplace_back(prefix + ".mape_excluded", std::to_string(report.mape_excluded));
    for (std::size_t b = 0; b < report.per_bin_f.size(); ++b) {
        const std::string lo = b == 0 ? "0" : fixed(report.bin_edges[b - 1], 0);
        const std::string hi = b == report.bin_edges.size() ? "inf" : fixed(report.bin_edges[b], 0);
        out.emplace_back(prefix + ".f[" + lo + "," + hi + ")", full_precision(report.per_bin_f[b]));
    }
    out.emplace_back(prefix + ".macro_f", full_precision(report.macro_f));
}

std::string format_metrics(const Metrics &metrics) {
    std::string s;
    for (const auto &[k, v] : metrics) s += k + "=" + v + "\n";
    return s;
}

void write_text(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

std::string format_table(const std::vector<std::string> &header, const std::vector<std::vector<std::string>> &rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto widen = [&](const std::vector<std::string> &row) {
        if (row.size() > width.size()) width.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    };
    widen(header);
    for (const auto &r : rows) widen(r);

    std::ostringstream out;
    auto emit = [&](const std::vector<std::string> &row) {
        std::string line;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < row.size() ? row[c] : "";
            const std::string pad(width[c] - cell.size(), ' ');
            if (c > 0) line += "  ";
            line += c == 0 ? cell + pad : pad + cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
    out << std::string(total, '-') << '\n';
    for (const auto &r : rows) emit(r);
    return out.str();
}

}  // namespace petition::eval
