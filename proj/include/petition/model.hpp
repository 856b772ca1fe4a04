#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "petition/corpus.hpp"
#include "petition/tensor.hpp"
#include "petition/text.hpp"

namespace petition::nn {

/// CNN model variants.
enum class Variant { Regress, RegressOrd, RegressFeat, RegressOrdFeat, RegressOrdFeatExtra };

Variant parse_variant(std::string_view name);
std::string_view to_string(Variant variant);
bool uses_ordinal(Variant variant);
bool uses_features(Variant variant);
bool uses_extra_hidden_layer(Variant variant);
std::vector<Variant> all_variants();

struct ModelConfig {
    std::size_t vocab_size = 2;
    std::size_t embed_dim = 100;
    std::vector<std::size_t> widths{1, 2, 3};
    std::size_t filters_per_width = 100;
    /// Hand-feature input size; 0 disables the fusion layer.
    std::size_t feature_dim = 0;
    std::size_t fusion_dim = 16;
    /// ELU hidden layers between the joint representation and the output.
    std::vector<std::size_t> hidden_sizes{64};
    /// Ordinal heads; 0 disables them.
    std::size_t n_thresholds = 0;
    double elu_alpha = 1.0;

    [[nodiscard]] std::size_t pooled_dim() const { return widths.size() * filters_per_width; }
    [[nodiscard]] std::size_t joint_dim() const { return pooled_dim() + (feature_dim > 0 ? fusion_dim : 0); }
    [[nodiscard]] std::size_t max_width() const;
    void validate() const;

    bool operator==(const ModelConfig &) const = default;
};

struct Parameter {
    std::string name;
    Tensor value;
};

/// Trainable parameters of the CNN regressor. Parameter order is fixed:
/// embeddings, conv{w}.weight/bias per width, fusion.weight/bias (if
/// features), dense{i}.weight/bias, output.weight/bias, ordinal.weight/bias
/// (if thresholds).
class CnnModel {
public:
    CnnModel() = default;
    /// Zero-initialised parameters of the right shapes.
    explicit CnnModel(ModelConfig config);

    /// Glorot-uniform weights, zero biases, embeddings uniform(-0.05, 0.05)
    /// with a zero pad row.
    void initialize(std::uint64_t seed);
    void set_embeddings(const text::EmbeddingTable &table);

    [[nodiscard]] const ModelConfig &config() const noexcept { return config_; }
    [[nodiscard]] std::span<Parameter> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const Parameter> parameters() const noexcept { return params_; }
    [[nodiscard]] Tensor &parameter(std::string_view name);
    [[nodiscard]] const Tensor &parameter(std::string_view name) const;
    [[nodiscard]] std::size_t parameter_count() const;

    // Parameter indices, for the forward/backward kernels.
    [[nodiscard]] std::size_t embedding_index() const noexcept { return 0; }
    [[nodiscard]] std::size_t conv_weight_index(std::size_t w) const noexcept { return 1 + 2 * w; }
    [[nodiscard]] std::size_t conv_bias_index(std::size_t w) const noexcept { return 2 + 2 * w; }
    [[nodiscard]] std::size_t fusion_weight_index() const noexcept { return fusion_index_; }
    [[nodiscard]] std::size_t dense_weight_index(std::size_t layer) const noexcept { return dense_index_ + 2 * layer; }
    [[nodiscard]] std::size_t output_weight_index() const noexcept { return output_index_; }
    [[nodiscard]] std::size_t ordinal_weight_index() const noexcept { return ordinal_index_; }

private:
    ModelConfig config_;
    std::vector<Parameter> params_;
    std::size_t fusion_index_ = 0;
    std::size_t dense_index_ = 0;
    std::size_t output_index_ = 0;
    std::size_t ordinal_index_ = 0;
};

/// Output of one document's forward pass plus what backprop needs.
struct ForwardTrace {
    double y_hat = 0.0;
    /// Sigmoid outputs clamped to [kProbEpsilon, 1 - kProbEpsilon].
    std::vector<double> ordinal_probs;
    /// tanh of the max-pooled convolution features.
    std::vector<double> hidden;
    /// tanh fusion layer output; empty without features.
    std::vector<double> feature_hidden;

    // Backprop cache.
    bool cached = false;
    std::vector<std::uint32_t> token_ids;
    std::vector<double> features;
    std::vector<double> pooled;
    /// argmax position per pooled unit (width-major).
    std::vector<std::uint32_t> argmax;
    std::vector<double> joint;
    std::vector<std::vector<double>> dense_pre;
    std::vector<std::vector<double>> dense_out;
    double output_pre = 0.0;
    /// Raw sigmoid values before clamping.
    std::vector<double> ordinal_raw;
};

inline constexpr double kProbEpsilon = 1e-7;

double elu(double x, double alpha);
double elu_derivative(double x, double alpha);
double sigmoid(double x);

/// Token ids shorter than the widest filter are right-padded with the pad
/// id. Throws ValidationError for out-of-range ids or a missing/ill-sized
/// feature vector when the model fuses features.
ForwardTrace forward(const CnnModel &model, std::span<const std::uint32_t> token_ids,
                     std::optional<std::span<const double>> features = std::nullopt, bool cache = true);

struct Target {
    double log_count = 0.0;
    std::vector<std::uint8_t> ordinal_bits;
};

struct LossBreakdown {
    double total = 0.0;
    double regression = 0.0;
    double auxiliary = 0.0;
};

/// L_reg = mean squared error in log space; L_aux = mean binary
/// cross-entropy over examples and thresholds; total = L_reg + gamma L_aux.
LossBreakdown joint_loss(std::span<const ForwardTrace> traces, std::span<const Target> targets, double gamma);

/// Gradients of joint_loss with respect to every parameter, in parameter
/// order. The pad embedding row is frozen and always gets zero gradient.
/// Throws StateError if a trace was produced without caching.
std::vector<Tensor> backward(const CnnModel &model, std::span<const ForwardTrace> traces,
                             std::span<const Target> targets, double gamma);

/// exp(max(y_hat, 0)) in the configured log base.
double predict_count(double y_hat, corpus::LogBase base = corpus::LogBase::Natural);

}  // namespace petition::nn
