#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "petition/adam.hpp"
#include "petition/corpus.hpp"
#include "petition/model.hpp"
#include "petition/text.hpp"

namespace petition::nn {

struct TrainConfig {
    double gamma = 0.0;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 13;
    /// Epochs without dev-MAE improvement before stopping; 0 disables.
    std::size_t patience = 5;
    std::vector<std::size_t> widths{1, 2, 3};
    std::size_t filters_per_width = 100;
    std::vector<std::size_t> hidden_sizes{64};
    std::size_t fusion_dim = 16;
    double elu_alpha = 1.0;
    bool use_features = false;
    bool use_ordinal = false;
    /// Appends one more hidden layer of the last hidden size.
    bool extra_hidden_layer = false;
    AdamConfig adam;
    corpus::LogBase log_base = corpus::LogBase::Natural;

    static TrainConfig for_variant(Variant variant);
    static TrainConfig for_variant(Variant variant, TrainConfig base);
    void validate() const;
};

/// A document ready for the network.
struct EncodedExample {
    std::vector<std::uint32_t> token_ids;
    /// Standardised hand features; empty when unused.
    std::vector<double> features;
    Target target;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_regression = 0.0;
    double train_auxiliary = 0.0;
    double dev_mae = 0.0;
};

struct TrainResult {
    CnnModel model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_dev_mae = 0.0;
    double gamma = 0.0;
};

/// Architecture implied by a training config and the data dimensions.
ModelConfig model_config_for(const TrainConfig &config, std::size_t vocab_size, std::size_t embed_dim,
                             std::size_t feature_dim, std::size_t n_thresholds);

/// Mini-batch Adam with per-epoch seeded shuffling. The model with the best
/// dev MAE is retained; with an empty dev set the training set stands in.
TrainResult train(const TrainConfig &config, std::span<const EncodedExample> train_set,
                  std::span<const EncodedExample> dev_set, const text::EmbeddingTable &embeddings,
                  std::size_t n_thresholds);

/// Log-space predictions max(y_hat, 0) for a set of documents.
std::vector<double> predict_log(const CnnModel &model, std::span<const EncodedExample> examples);

/// Pooled tanh representation h for each document, row-major n x pooled_dim.
std::vector<std::vector<double>> hidden_representations(const CnnModel &model,
                                                        std::span<const EncodedExample> examples);

struct GammaTrial {
    double gamma = 0.0;
    double dev_mae = 0.0;
};

struct GammaSearch {
    TrainResult best;
    std::vector<GammaTrial> trials;
};

/// Trains one model per gamma and keeps the lowest dev MAE (first wins on ties).
GammaSearch tune_gamma(const TrainConfig &config, std::span<const double> grid,
                       std::span<const EncodedExample> train_set, std::span<const EncodedExample> dev_set,
                       const text::EmbeddingTable &embeddings, std::size_t n_thresholds);

}  // namespace petition::nn
