#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "petition/corpus.hpp"
#include "petition/text.hpp"

namespace petition::baselines {

struct MeanModel {
    double mean = 0.0;
    [[nodiscard]] double predict() const noexcept { return mean; }
};

/// Throws ValidationError on an empty training set.
MeanModel mean_predictor(std::span<const double> y);

struct RidgeModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double lambda = 1.0;
    /// |(Xc'Xc + lambda I) w - Xc'yc| after the solve, Xc/yc centred.
    double residual = 0.0;
    std::size_t iterations = 0;

    [[nodiscard]] double predict(const text::SparseVector &x) const;
};

/// min |Xw + b - y|^2 + lambda |w|^2 with b unpenalised. Jacobi-preconditioned
/// conjugate gradient on the centred normal equations, stopping at residual
/// `tolerance`. Throws ValidationError on bad shapes or non-finite data.
RidgeModel ridge_fit(std::span<const text::SparseVector> x, std::span<const double> y, double lambda,
                     double tolerance = 1e-8);

/// General Inquirer style category lists.
struct GiLexicon {
    /// Sorted category names.
    std::vector<std::string> categories;
    std::unordered_map<std::string, std::vector<std::size_t>> word_categories;
};

/// "word<TAB>category" per line; repeated words collect several categories.
GiLexicon parse_gi_lexicon(std::string_view content, const std::string &source = "<memory>");
GiLexicon load_gi_lexicon(const std::filesystem::path &path);

/// Per-category hit count over the token count (zeros for no tokens).
std::vector<double> gi_features(std::span<const std::string> tokens, const GiLexicon &lexicon);

double rbf_kernel(const text::SparseVector &a, const text::SparseVector &b, double sigma);

struct KernelRidgeModel {
    std::vector<text::SparseVector> support;
    std::vector<double> alpha;
    double sigma = 1.0;
    double lambda = 1.0;
    /// Added to every prediction; the training mean when targets were centred.
    double offset = 0.0;

    [[nodiscard]] double predict(const text::SparseVector &x) const;
};

struct KrrOptions {
    /// Uniform subsample of at most this many rows; 0 keeps all.
    std::size_t cap = 0;
    std::uint64_t seed = 0;
    /// Fit y - mean(y) and add the mean back.
    bool center_targets = false;
};

/// alpha = (K + lambda I)^-1 y with an RBF Gram matrix. Throws NumericError
/// when the Cholesky factorisation fails.
KernelRidgeModel krr_fit(std::span<const text::SparseVector> x, std::span<const double> y, double sigma,
                         double lambda, const KrrOptions &options = {});

/// Median pairwise Euclidean distance over a seeded sample of up to
/// `max_points` rows; 1 when every sampled distance is 0.
double median_heuristic(std::span<const text::SparseVector> x, std::size_t max_points, std::uint64_t seed);

struct LogisticHead {
    std::vector<double> weights;
    double intercept = 0.0;
};

/// One L2-regularised logistic regression per threshold, standing in for
/// an SVM ordinal classifier.
struct OrdinalLogisticModel {
    std::vector<LogisticHead> heads;
    std::vector<std::int64_t> thresholds;

    [[nodiscard]] std::vector<double> probabilities(const text::SparseVector &x) const;
    /// Number of leading thresholds with probability >= 0.5.
    [[nodiscard]] std::size_t level(const text::SparseVector &x) const;
    /// A count inside the predicted level's bin.
    [[nodiscard]] double representative_count(const text::SparseVector &x) const;
};

OrdinalLogisticModel ordinal_logistic_fit(std::span<const text::SparseVector> x,
                                          std::span<const std::vector<std::uint8_t>> bits,
                                          const corpus::OrdinalScheme &scheme, double lambda,
                                          std::size_t iterations = 200);

/// Design rows of one split.
struct SplitDesign {
    std::vector<text::SparseVector> bow;
    std::vector<text::SparseVector> gi;
    /// Standardised hand features; may be empty.
    std::vector<text::SparseVector> feat;
};

struct SuiteOptions {
    std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> sigma_multipliers{0.5, 1.0, 2.0};
    std::size_t krr_cap = 4000;
    std::uint64_t seed = 13;
    bool run_krr = true;
    bool run_ordinal = true;
};

struct BaselinePrediction {
    std::string name;
    double lambda = 0.0;
    double sigma = 0.0;
    double dev_mae = 0.0;
    /// Log-space test predictions, clamped at 0.
    std::vector<double> test_log;
    /// Counts for the binned F-score; from test_log unless the model is a classifier.
    std::vector<double> test_counts;
};

/// Mean, Linear_BoW, Linear_GI, KRR_BoW, KRR_feat, KRR_BoW+feat and the
/// ordinal logistic stand-in. Hyperparameters are chosen by dev MAE; only
/// train and dev labels are read.
std::vector<BaselinePrediction> baseline_suite(const SplitDesign &train, const SplitDesign &dev,
                                               const SplitDesign &test, std::span<const double> y_train,
                                               std::span<const double> y_dev,
                                               std::span<const std::vector<std::uint8_t>> bits_train,
                                               const corpus::OrdinalScheme &scheme, corpus::LogBase base,
                                               const SuiteOptions &options = {});

}  // namespace petition::baselines
