#include "petition/model.hpp"

#include <algorithm>
#include <cmath>

#include "petition/errors.hpp"
#include "petition/rng.hpp"

namespace petition::nn {

namespace {

struct VariantInfo {
    Variant variant;
    std::string_view name;
    bool ordinal;
    bool features;
    bool extra;
};

constexpr VariantInfo kVariants[] = {
    {Variant::Regress, "regress", false, false, false},
    {Variant::RegressOrd, "regress+ord", true, false, false},
    {Variant::RegressFeat, "regress+feat", false, true, false},
    {Variant::RegressOrdFeat, "regress+ord+feat", true, true, false},
    {Variant::RegressOrdFeatExtra, "regress+ord+feat+extra", true, true, true},
};

const VariantInfo &info(Variant v) {
    for (const auto &i : kVariants) {
        if (i.variant == v) return i;
    }
    throw ValidationError("unknown variant");
}

void glorot(Tensor &t, std::size_t fan_in, std::size_t fan_out, Rng &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double &x : t.data()) x = rng.uniform(-limit, limit);
}

}  // namespace

Variant parse_variant(std::string_view name) {
    for (const auto &i : kVariants) {
        if (i.name == name) return i.variant;
    }
    throw ValidationError("unknown variant '" + std::string(name) +
                          "' (expected regress, regress+ord, regress+feat, regress+ord+feat, regress+ord+feat+extra)");
}

std::string_view to_string(Variant variant) { return info(variant).name; }
bool uses_ordinal(Variant variant) { return info(variant).ordinal; }
bool uses_features(Variant variant) { return info(variant).features; }
bool uses_extra_hidden_layer(Variant variant) { return info(variant).extra; }

std::vector<Variant> all_variants() {
    std::vector<Variant> out;
    for (const auto &i : kVariants) out.push_back(i.variant);
    return out;
}

std::size_t ModelConfig::max_width() const {
    return widths.empty() ? 0 : *std::max_element(widths.begin(), widths.end());
}

void ModelConfig::validate() const {
    if (vocab_size < 2) throw ValidationError("model: vocabulary must hold at least pad and unknown");
    if (embed_dim == 0 || filters_per_width == 0) throw ValidationError("model: sizes must be positive");
    if (widths.empty()) throw ValidationError("model: at least one filter width required");
    if (std::any_of(widths.begin(), widths.end(), [](std::size_t w) { return w == 0; })) {
        throw ValidationError("model: filter widths must be positive");
    }
    if (feature_dim > 0 && fusion_dim == 0) throw ValidationError("model: fusion_dim must be positive");
    if (std::any_of(hidden_sizes.begin(), hidden_sizes.end(), [](std::size_t h) { return h == 0; })) {
        throw ValidationError("model: hidden sizes must be positive");
    }
    if (!(elu_alpha > 0.0)) throw ValidationError("model: elu_alpha must be > 0");
}

CnnModel::CnnModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto &c = config_;
    params_.push_back({"embeddings", Tensor({c.vocab_size, c.embed_dim})});
    for (const std::size_t w : c.widths) {
        const std::string prefix = "conv" + std::to_string(w);
        params_.push_back({prefix + ".weight", Tensor({c.filters_per_width, w * c.embed_dim})});
        params_.push_back({prefix + ".bias", Tensor({c.filters_per_width})});
    }
    fusion_index_ = params_.size();
    if (c.feature_dim > 0) {
        params_.push_back({"fusion.weight", Tensor({c.fusion_dim, c.feature_dim})});
        params_.push_back({"fusion.bias", Tensor({c.fusion_dim})});
    }
    dense_index_ = params_.size();
    std::size_t in = c.joint_dim();
    for (std::size_t l = 0; l < c.hidden_sizes.size(); ++l) {
        params_.push_back({"dense" + std::to_string(l) + ".weight", Tensor({c.hidden_sizes[l], in})});
        params_.push_back({"dense" + std::to_string(l) + ".bias", Tensor({c.hidden_sizes[l]})});
        in = c.hidden_sizes[l];
    }
    output_index_ = params_.size();
    params_.push_back({"output.weight", Tensor({1, in})});
    params_.push_back({"output.bias", Tensor({1})});
    ordinal_index_ = params_.size();
    if (c.n_thresholds > 0) {
        params_.push_back({"ordinal.weight", Tensor({c.n_thresholds, c.joint_dim()})});
        params_.push_back({"ordinal.bias", Tensor({c.n_thresholds})});
    }
}

void CnnModel::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (auto &p : params_) {
        Tensor &t = p.value;
        if (p.name == "embeddings") {
            for (double &x : t.data()) x = rng.uniform(-0.05, 0.05);
            std::fill_n(t.data().begin(), config_.embed_dim, 0.0);
        } else if (p.name.ends_with(".weight")) {
            glorot(t, t.cols(), t.rows(), rng);
        } else {
            t.fill(0.0);
        }
    }
}

void CnnModel::set_embeddings(const text::EmbeddingTable &table) {
    if (table.rows != config_.vocab_size || table.dim != config_.embed_dim) {
        throw ValidationError("embedding table is " + std::to_string(table.rows) + "x" + std::to_string(table.dim) +
                              ", model expects " + std::to_string(config_.vocab_size) + "x" +
                              std::to_string(config_.embed_dim));
    }
    auto dst = params_[embedding_index()].value.data();
    std::copy(table.values.begin(), table.values.end(), dst.begin());
    std::fill_n(dst.begin(), config_.embed_dim, 0.0);
}

Tensor &CnnModel::parameter(std::string_view name) {
    for (auto &p : params_) {
        if (p.name == name) return p.value;
    }
    throw ValidationError("no parameter named '" + std::string(name) + "'");
}

const Tensor &CnnModel::parameter(std::string_view name) const {
    return const_cast<CnnModel *>(this)->parameter(name);
}

std::size_t CnnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto &p : params_) n += p.value.size();
    return n;
}

double elu(double x, double alpha) { return x > 0.0 ? x : alpha * std::expm1(x); }

double elu_derivative(double x, double alpha) { return x > 0.0 ? 1.0 : alpha * std::exp(x); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

ForwardTrace forward(const CnnModel &model, std::span<const std::uint32_t> token_ids,
                     std::optional<std::span<const double>> features, bool cache) {
    const ModelConfig &c = model.config();
    const auto params = model.parameters();
    const std::size_t d = c.embed_dim;

    std::vector<std::uint32_t> ids(token_ids.begin(), token_ids.end());
    if (ids.size() < c.max_width()) ids.resize(c.max_width(), text::Vocabulary::kPad);
    for (const auto id : ids) {
        if (id >= c.vocab_size) {
            throw ValidationError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                                  std::to_string(c.vocab_size));
        }
    }
    if (c.feature_dim > 0) {
        if (!features || features->size() != c.feature_dim) {
            throw ValidationError("model fuses " + std::to_string(c.feature_dim) +
                                  " hand features; feature vector missing or wrong size");
        }
    }

    // Gather the document matrix once so every window is contiguous.
    const Tensor &emb = params[model.embedding_index()].value;
    std::vector<double> doc(ids.size() * d);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto src = emb.row(ids[t]);
        std::copy(src.begin(), src.end(), doc.begin() + static_cast<std::ptrdiff_t>(t * d));
    }

    ForwardTrace trace;
    const std::size_t nf = c.filters_per_width;
    trace.pooled.assign(c.pooled_dim(), 0.0);
    trace.argmax.assign(c.pooled_dim(), 0);
    for (std::size_t wi = 0; wi < c.widths.size(); ++wi) {
        const std::size_t w = c.widths[wi];
        const Tensor &weight = params[model.conv_weight_index(wi)].value;
        const Tensor &bias = params[model.conv_bias_index(wi)].value;
        const std::size_t positions = ids.size() - w + 1;
        for (std::size_t f = 0; f < nf; ++f) {
            const auto filter = weight.row(f);
            double best = -INFINITY;
            std::uint32_t best_t = 0;
            for (std::size_t t = 0; t < positions; ++t) {
                const double v = dot(filter, std::span<const double>(doc.data() + t * d, w * d));
                if (v > best) {
                    best = v;
                    best_t = static_cast<std::uint32_t>(t);
                }
            }
            // ReLU then max-over-time equals ReLU of the max.
            trace.pooled[wi * nf + f] = std::max(0.0, best + bias[f]);
            trace.argmax[wi * nf + f] = best_t;
        }
    }

    trace.hidden.resize(trace.pooled.size());
    std::transform(trace.pooled.begin(), trace.pooled.end(), trace.hidden.begin(), [](double x) { return std::tanh(x); });

    trace.joint = trace.hidden;
    if (c.feature_dim > 0) {
        const Tensor &fw = params[model.fusion_weight_index()].value;
        const Tensor &fb = params[model.fusion_weight_index() + 1].value;
        trace.feature_hidden.resize(c.fusion_dim);
        for (std::size_t j = 0; j < c.fusion_dim; ++j) {
            trace.feature_hidden[j] = std::tanh(dot(fw.row(j), *features) + fb[j]);
        }
        trace.joint.insert(trace.joint.end(), trace.feature_hidden.begin(), trace.feature_hidden.end());
        trace.features.assign(features->begin(), features->end());
    }

    const std::vector<double> *input = &trace.joint;
    trace.dense_pre.resize(c.hidden_sizes.size());
    trace.dense_out.resize(c.hidden_sizes.size());
    for (std::size_t l = 0; l < c.hidden_sizes.size(); ++l) {
        const Tensor &wt = params[model.dense_weight_index(l)].value;
        const Tensor &bs = params[model.dense_weight_index(l) + 1].value;
        auto &pre = trace.dense_pre[l];
        auto &out = trace.dense_out[l];
        pre.resize(c.hidden_sizes[l]);
        out.resize(c.hidden_sizes[l]);
        for (std::size_t j = 0; j < pre.size(); ++j) {
            pre[j] = dot(wt.row(j), *input) + bs[j];
            out[j] = elu(pre[j], c.elu_alpha);
        }
        input = &out;
    }
    const Tensor &ow = params[model.output_weight_index()].value;
    const Tensor &ob = params[model.output_weight_index() + 1].value;
    trace.output_pre = dot(ow.row(0), *input) + ob[0];
    trace.y_hat = elu(trace.output_pre, c.elu_alpha);

    if (c.n_thresholds > 0) {
        const Tensor &uw = params[model.ordinal_weight_index()].value;
        const Tensor &ub = params[model.ordinal_weight_index() + 1].value;
        trace.ordinal_raw.resize(c.n_thresholds);
        trace.ordinal_probs.resize(c.n_thresholds);
        for (std::size_t k = 0; k < c.n_thresholds; ++k) {
            trace.ordinal_raw[k] = sigmoid(dot(uw.row(k), trace.joint) + ub[k]);
            trace.ordinal_probs[k] = std::clamp(trace.ordinal_raw[k], kProbEpsilon, 1.0 - kProbEpsilon);
        }
    }

    if (cache) {
        trace.cached = true;
        trace.token_ids = std::move(ids);
    } else {
        trace.argmax.clear();
        trace.dense_pre.clear();
        trace.dense_out.clear();
        trace.features.clear();
    }
    return trace;
}

LossBreakdown joint_loss(std::span<const ForwardTrace> traces, std::span<const Target> targets, double gamma) {
    if (traces.empty()) throw ValidationError("joint_loss: empty batch");
    if (traces.size() != targets.size()) throw ValidationError("joint_loss: traces and targets differ in length");
    LossBreakdown out;
    double bce_sum = 0.0;
    std::size_t bce_terms = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const double r = traces[i].y_hat - targets[i].log_count;
        out.regression += r * r;
        const auto &probs = traces[i].ordinal_probs;
        if (!probs.empty() && probs.size() != targets[i].ordinal_bits.size()) {
            throw ValidationError("joint_loss: ordinal head count does not match bit vector length");
        }
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double p = std::clamp(probs[k], kProbEpsilon, 1.0 - kProbEpsilon);
            bce_sum -= targets[i].ordinal_bits[k] != 0 ? std::log(p) : std::log1p(-p);
            ++bce_terms;
        }
    }
    out.regression /= static_cast<double>(traces.size());
    out.auxiliary = bce_terms > 0 ? bce_sum / static_cast<double>(bce_terms) : 0.0;
    out.total = out.regression + gamma * out.auxiliary;
    return out;
}

std::vector<Tensor> backward(const CnnModel &model, std::span<const ForwardTrace> traces,
                             std::span<const Target> targets, double gamma) {
    if (traces.empty()) throw ValidationError("backward: empty batch");
    if (traces.size() != targets.size()) throw ValidationError("backward: traces and targets differ in length");
    const ModelConfig &c = model.config();
    const auto params = model.parameters();
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const auto &p : params) grads.emplace_back(p.value.shape());

    const double n = static_cast<double>(traces.size());
    const std::size_t K = c.n_thresholds;
    const std::size_t d = c.embed_dim;
    const std::size_t nf = c.filters_per_width;
    const std::size_t L = c.hidden_sizes.size();

    std::vector<double> d_joint(c.joint_dim());
    std::vector<double> d_act;
    std::vector<double> d_prev;

    for (std::size_t i = 0; i < traces.size(); ++i) {
        const ForwardTrace &tr = traces[i];
        if (!tr.cached) throw StateError("backward: forward trace was computed without caching");
        std::fill(d_joint.begin(), d_joint.end(), 0.0);

        // Output head.
        const double d_y = 2.0 * (tr.y_hat - targets[i].log_count) / n;
        const double d_out_pre = d_y * elu_derivative(tr.output_pre, c.elu_alpha);
        const std::vector<double> &last = L > 0 ? tr.dense_out[L - 1] : tr.joint;
        {
            Tensor &gw = grads[model.output_weight_index()];
            axpy(d_out_pre, last, gw.row(0));
            grads[model.output_weight_index() + 1][0] += d_out_pre;
            const auto w = params[model.output_weight_index()].value.row(0);
            d_act.assign(w.begin(), w.end());
            for (double &x : d_act) x *= d_out_pre;
        }

        // Dense stack, last layer first.
        for (std::size_t l = L; l-- > 0;) {
            const std::vector<double> &in = l > 0 ? tr.dense_out[l - 1] : tr.joint;
            const Tensor &wt = params[model.dense_weight_index(l)].value;
            Tensor &gw = grads[model.dense_weight_index(l)];
            Tensor &gb = grads[model.dense_weight_index(l) + 1];
            d_prev.assign(in.size(), 0.0);
            for (std::size_t j = 0; j < c.hidden_sizes[l]; ++j) {
                const double g = d_act[j] * elu_derivative(tr.dense_pre[l][j], c.elu_alpha);
                if (g == 0.0) continue;
                axpy(g, in, gw.row(j));
                gb[j] += g;
                axpy(g, wt.row(j), d_prev);
            }
            d_act.swap(d_prev);
        }
        for (std::size_t j = 0; j < d_joint.size(); ++j) d_joint[j] += d_act[j];

        // Ordinal heads read the joint representation.
        if (K > 0) {
            const Tensor &uw = params[model.ordinal_weight_index()].value;
            Tensor &gu = grads[model.ordinal_weight_index()];
            Tensor &gub = grads[model.ordinal_weight_index() + 1];
            for (std::size_t k = 0; k < K; ++k) {
                const double raw = tr.ordinal_raw[k];
                // The clamp is flat outside [eps, 1 - eps].
                if (raw < kProbEpsilon || raw > 1.0 - kProbEpsilon) continue;
                const double g = gamma * (raw - static_cast<double>(targets[i].ordinal_bits[k])) / (n * static_cast<double>(K));
                axpy(g, tr.joint, gu.row(k));
                gub[k] += g;
                axpy(g, uw.row(k), d_joint);
            }
        }

        // Fusion layer.
        const std::size_t P = c.pooled_dim();
        if (c.feature_dim > 0) {
            Tensor &gv = grads[model.fusion_weight_index()];
            Tensor &gvb = grads[model.fusion_weight_index() + 1];
            for (std::size_t j = 0; j < c.fusion_dim; ++j) {
                const double ch = tr.feature_hidden[j];
                const double g = d_joint[P + j] * (1.0 - ch * ch);
                axpy(g, tr.features, gv.row(j));
                gvb[j] += g;
            }
        }

        // tanh over pooled features, then max-over-time + ReLU into conv.
        Tensor &gemb = grads[model.embedding_index()];
        for (std::size_t wi = 0; wi < c.widths.size(); ++wi) {
            const std::size_t w = c.widths[wi];
            const Tensor &weight = params[model.conv_weight_index(wi)].value;
            Tensor &gw = grads[model.conv_weight_index(wi)];
            Tensor &gb = grads[model.conv_bias_index(wi)];
            for (std::size_t f = 0; f < nf; ++f) {
                const std::size_t u = wi * nf + f;
                if (tr.pooled[u] <= 0.0) continue;
                const double h = tr.hidden[u];
                const double g = d_joint[u] * (1.0 - h * h);
                if (g == 0.0) continue;
                const std::size_t t0 = tr.argmax[u];
                const auto filter = weight.row(f);
                auto grow = gw.row(f);
                const Tensor &emb = params[model.embedding_index()].value;
                for (std::size_t j = 0; j < w; ++j) {
                    const std::uint32_t id = tr.token_ids[t0 + j];
                    axpy(g, emb.row(id), grow.subspan(j * d, d));
                    if (id != text::Vocabulary::kPad) axpy(g, filter.subspan(j * d, d), gemb.row(id));
                }
                gb[f] += g;
            }
        }
    }
    return grads;
}

double predict_count(double y_hat, corpus::LogBase base) {
    return corpus::inverse_log_target(std::max(y_hat, 0.0), base);
}

}  // namespace petition::nn
