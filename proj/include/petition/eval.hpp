#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "petition/corpus.hpp"
#include "petition/special_functions.hpp"

namespace petition::eval {

/// (1/n) sum |pred - truth|. Throws ValidationError on empty or mismatched input.
double mae(std::span<const double> pred, std::span<const double> truth);

struct MapeResult {
    double value = 0.0;
    /// Pairs skipped because the truth was zero.
    std::size_t excluded = 0;
};

/// (100/n) sum |pred - truth| / truth over pairs with a non-zero truth.
MapeResult mape(std::span<const double> pred, std::span<const double> truth);

/// Bin of a count given strictly increasing inner edges: bin b holds
/// [edges[b-1], edges[b]).
std::size_t bin_index(double count, std::span<const double> edges);

struct BinScores {
    std::vector<double> per_class;
    double macro = 0.0;
    /// confusion[truth][pred]
    std::vector<std::vector<std::size_t>> confusion;
};

/// Per-class F1 over edges.size() + 1 bins; a class with no true and no
/// predicted members scores 0 and still counts toward the macro mean.
BinScores bin_fscore(std::span<const double> pred_counts, std::span<const double> true_counts,
                     std::span<const double> edges);

/// Inner F-score edges: {10000, 100000} for the UK ladder, {100000} for the US one.
std::vector<double> fscore_edges(const corpus::OrdinalScheme &scheme);

enum class MetricSpace { Log, Raw };

struct EvalReport {
    std::size_t n = 0;
    double mae = 0.0;
    double mape = 0.0;
    std::size_t mape_excluded = 0;
    std::vector<double> per_bin_f;
    double macro_f = 0.0;
    std::vector<double> bin_edges;
    MetricSpace space = MetricSpace::Log;
};

/// MAE/MAPE on log targets (or raw counts) and binned F on counts.
EvalReport evaluate(std::span<const double> pred_log, std::span<const double> truth_log,
                    std::span<const double> pred_counts, std::span<const double> true_counts,
                    std::span<const double> edges, MetricSpace space = MetricSpace::Log);

/// Average ranks (1-based) of the values, ties sharing their mean rank.
std::vector<double> midranks(std::span<const double> values);

struct KwResult {
    double h = 0.0;
    int df = 0;
    double p = 1.0;
    bool tie_corrected = false;
};

/// Needs >= 2 non-empty groups and N >= 3. All-equal data gives H = 0, p = 1.
KwResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// "***", "**", "*" at p < 0.001 / 0.01 / 0.05, else "".
std::string stars(double p);

struct DependencyResult {
    std::string name;
    double r2 = 0.0;
    double f_stat = 0.0;
    double p_hidden = 1.0;
    /// Design was rank deficient; solved with a 1e-6 ridge and d = numerical rank.
    bool ridge_fallback = false;
    int df1 = 0;
    int df2 = 0;
};

/// OLS of one response on [1, hidden] with the overall F-test.
DependencyResult dependency_regression(std::span<const std::vector<double>> hidden, std::span<const double> response,
                                       std::string name = {});

/// One regression per column of `features` (row-major n x m).
std::vector<DependencyResult> dependency_analysis(std::span<const std::vector<double>> hidden,
                                                  std::span<const std::vector<double>> features,
                                                  std::span<const std::string> names);

struct SignificanceRow {
    std::string name;
    KwResult kw;
    std::string stars;
    std::size_t groups_used = 0;
    std::size_t groups_dropped = 0;
};

/// Groups rows by ordinal level of their count and runs one Kruskal-Wallis
/// test per feature column. Empty groups are dropped and counted.
std::vector<SignificanceRow> feature_significance_table(std::span<const std::vector<double>> features,
                                                        std::span<const std::int64_t> counts,
                                                        const corpus::OrdinalScheme &scheme,
                                                        std::span<const std::string> names);

/// Flat "key=value" records, one per line, in the given order.
using Metrics = std::vector<std::pair<std::string, std::string>>;

void add_report(Metrics &out, const std::string &prefix, const EvalReport &report);
std::string format_metrics(const Metrics &metrics);
void write_text(const std::filesystem::path &path, const std::string &content);

/// Columns padded to their widest cell; first column left-aligned, the rest right-aligned.
std::string format_table(const std::vector<std::string> &header, const std::vector<std::vector<std::string>> &rows);

/// Fixed-point with `digits` decimals.
std::string fixed(double value, int digits = 2);

}  // namespace petition::eval
