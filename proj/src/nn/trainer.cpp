#include "petition/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "petition/errors.hpp"
#include "petition/rng.hpp"

namespace petition::nn {

namespace {

std::optional<std::span<const double>> features_of(const EncodedExample &ex) {
    if (ex.features.empty()) return std::nullopt;
    return std::span<const double>(ex.features);
}

double dev_mae(const CnnModel &model, std::span<const EncodedExample> set) {
    double s = 0.0;
    for (const auto &ex : set) {
        const ForwardTrace tr = forward(model, ex.token_ids, features_of(ex), false);
        s += std::abs(std::max(tr.y_hat, 0.0) - ex.target.log_count);
    }
    return s / static_cast<double>(set.size());
}

}  // namespace

TrainConfig TrainConfig::for_variant(Variant variant) { return for_variant(variant, TrainConfig{}); }

TrainConfig TrainConfig::for_variant(Variant variant, TrainConfig base) {
    base.use_ordinal = uses_ordinal(variant);
    base.use_features = uses_features(variant);
    base.extra_hidden_layer = uses_extra_hidden_layer(variant);
    if (!base.use_ordinal) base.gamma = 0.0;
    return base;
}

void TrainConfig::validate() const {
    if (!(gamma >= 0.0)) throw ValidationError("train: gamma must be >= 0");
    if (epochs == 0 || batch_size == 0 || filters_per_width == 0 || fusion_dim == 0) {
        throw ValidationError("train: epochs, batch size and layer sizes must be positive");
    }
    if (!(adam.lr > 0.0)) throw ValidationError("train: learning rate must be > 0");
}

ModelConfig model_config_for(const TrainConfig &config, std::size_t vocab_size, std::size_t embed_dim,
                             std::size_t feature_dim, std::size_t n_thresholds) {
    ModelConfig mc;
    mc.vocab_size = vocab_size;
    mc.embed_dim = embed_dim;
    mc.widths = config.widths;
    mc.filters_per_width = config.filters_per_width;
    mc.feature_dim = config.use_features ? feature_dim : 0;
    mc.fusion_dim = config.fusion_dim;
    mc.hidden_sizes = config.hidden_sizes;
    if (config.extra_hidden_layer) {
        mc.hidden_sizes.push_back(mc.hidden_sizes.empty() ? 64 : mc.hidden_sizes.back());
    }
    mc.n_thresholds = config.use_ordinal ? n_thresholds : 0;
    mc.elu_alpha = config.elu_alpha;
    return mc;
}

TrainResult train(const TrainConfig &config, std::span<const EncodedExample> train_set,
                  std::span<const EncodedExample> dev_set, const text::EmbeddingTable &embeddings,
                  std::size_t n_thresholds) {
    config.validate();
    if (train_set.empty()) throw ValidationError("train: empty training split");
    const std::size_t feature_dim = train_set.front().features.size();
    if (config.use_features && feature_dim == 0) throw ValidationError("train: variant needs hand features");
    for (const auto &ex : train_set) {
        if (ex.features.size() != feature_dim) throw ValidationError("train: inconsistent feature dimensions");
        if (config.use_ordinal && ex.target.ordinal_bits.size() != n_thresholds) {
            throw ValidationError("train: ordinal bit vector length does not match the scheme");
        }
    }

    const ModelConfig mc = model_config_for(config, embeddings.rows, embeddings.dim, feature_dim, n_thresholds);
    CnnModel model(mc);
    model.initialize(config.seed);
    model.set_embeddings(embeddings);

    // Start the output at the mean target and the ordinal heads at the
    // training base rates.
    double mean_y = 0.0;
    for (const auto &ex : train_set) mean_y += ex.target.log_count;
    mean_y /= static_cast<double>(train_set.size());
    model.parameter("output.bias")[0] =
        mean_y > 0.0 ? mean_y : std::log1p(std::max(mean_y / mc.elu_alpha, -0.999));
    if (mc.n_thresholds > 0) {
        Tensor &bias = model.parameter("ordinal.bias");
        for (std::size_t k = 0; k < mc.n_thresholds; ++k) {
            double rate = 0.0;
            for (const auto &ex : train_set) rate += ex.target.ordinal_bits[k];
            rate = std::clamp(rate / static_cast<double>(train_set.size()), 1e-3, 1.0 - 1e-3);
            bias[k] = std::log(rate / (1.0 - rate));
        }
    }

    const double gamma = mc.n_thresholds > 0 ? config.gamma : 0.0;
    const std::span<const EncodedExample> selection = dev_set.empty() ? train_set : dev_set;

    AdamState adam(model.parameters(), config.adam);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.gamma = gamma;
    result.model = model;
    result.best_dev_mae = INFINITY;
    std::size_t since_best = 0;

    std::vector<ForwardTrace> traces;
    std::vector<Target> targets;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        EpochRecord record;
        record.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            traces.clear();
            targets.clear();
            for (std::size_t b = start; b < end; ++b) {
                const EncodedExample &ex = train_set[order[b]];
                traces.push_back(forward(model, ex.token_ids, features_of(ex), true));
                targets.push_back(ex.target);
            }
            const LossBreakdown loss = joint_loss(traces, targets, gamma);
            const double weight = static_cast<double>(end - start);
            record.train_loss += loss.total * weight;
            record.train_regression += loss.regression * weight;
            record.train_auxiliary += loss.auxiliary * weight;
            const std::vector<Tensor> grads = backward(model, traces, targets, gamma);
            adam_step(model.parameters(), grads, adam);
        }
        const auto n = static_cast<double>(order.size());
        record.train_loss /= n;
        record.train_regression /= n;
        record.train_auxiliary /= n;
        record.dev_mae = dev_mae(model, selection);
        if (!std::isfinite(record.train_loss) || !std::isfinite(record.dev_mae)) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch));
        }
        result.history.push_back(record);

        if (record.dev_mae < result.best_dev_mae) {
            result.best_dev_mae = record.dev_mae;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            break;
        }
    }
    return result;
}

std::vector<double> predict_log(const CnnModel &model, std::span<const EncodedExample> examples) {
    std::vector<double> out;
    out.reserve(examples.size());
    for (const auto &ex : examples) {
        out.push_back(std::max(forward(model, ex.token_ids, features_of(ex), false).y_hat, 0.0));
    }
    return out;
}

std::vector<std::vector<double>> hidden_representations(const CnnModel &model,
                                                        std::span<const EncodedExample> examples) {
    std::vector<std::vector<double>> out;
    out.reserve(examples.size());
    for (const auto &ex : examples) out.push_back(forward(model, ex.token_ids, features_of(ex), false).hidden);
    return out;
}

GammaSearch tune_gamma(const TrainConfig &config, std::span<const double> grid,
                       std::span<const EncodedExample> train_set, std::span<const EncodedExample> dev_set,
                       const text::EmbeddingTable &embeddings, std::size_t n_thresholds) {
    if (grid.empty()) throw ValidationError("tune_gamma: empty gamma grid");
    GammaSearch search;
    bool have_best = false;
    for (const double g : grid) {
        TrainConfig cfg = config;
        cfg.gamma = g;
        TrainResult r = train(cfg, train_set, dev_set, embeddings, n_thresholds);
        search.trials.push_back({g, r.best_dev_mae});
        if (!have_best || r.best_dev_mae < search.best.best_dev_mae) {
            search.best = std::move(r);
            have_best = true;
        }
    }
    return search;
}

}  // namespace petition::nn
