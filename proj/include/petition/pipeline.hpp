#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "petition/baselines.hpp"
#include "petition/corpus.hpp"
#include "petition/eval.hpp"
#include "petition/model.hpp"
#include "petition/trainer.hpp"

namespace petition::pipeline {

struct LexiconPaths {
    std::optional<std::filesystem::path> subjective;
    std::optional<std::filesystem::path> positive;
    std::optional<std::filesystem::path> negative;
    std::optional<std::filesystem::path> bias;
    /// word<TAB>category file for the Linear_GI baseline.
    std::optional<std::filesystem::path> gi;
};

struct RunConfig {
    std::filesystem::path petitions;
    std::optional<std::filesystem::path> embeddings;
    LexiconPaths lexicons;
    std::optional<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> external_scores;
    std::filesystem::path output_dir = "out";

    std::string scheme = "uk";
    corpus::LogBase log_base = corpus::LogBase::Natural;
    std::uint64_t seed = 13;
    std::size_t embed_dim = 100;
    std::size_t min_count = 2;
    std::size_t max_length = 400;

    nn::TrainConfig train;
    std::vector<double> gamma_grid{0.1, 0.3, 1.0, 3.0};
    baselines::SuiteOptions baseline;
    eval::MetricSpace metric_space = eval::MetricSpace::Log;

    [[nodiscard]] corpus::OrdinalScheme ordinal_scheme() const;
    /// Petitions at or below this count are dropped (150 for the US corpus).
    [[nodiscard]] std::optional<std::int64_t> drop_threshold() const;
    /// Referenced input files must exist.
    void validate() const;
};

/// Parses a JSON config; relative paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path &path);
RunConfig parse_config(std::string_view json_text, const std::filesystem::path &base_dir);

/// Records which prepared artifacts each command opened.
struct AccessLog {
    std::vector<std::string> reads;
    void clear() { reads.clear(); }
    [[nodiscard]] bool touched(std::string_view name) const;
};

AccessLog &access_log();

/// Warnings go here; stderr by default.
void set_warning_sink(std::function<void(const std::string &)> sink);
void warn(const std::string &message);

std::filesystem::path prepared_dir(const RunConfig &config);
std::filesystem::path model_dir(const RunConfig &config, nn::Variant variant);
std::filesystem::path reports_dir(const RunConfig &config);

struct PrepareSummary {
    std::size_t loaded = 0;
    std::size_t dropped = 0;
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::size_t vocab_size = 0;
    std::filesystem::path manifest;
};

PrepareSummary run_prepare(const RunConfig &config);

struct TrainSummary {
    nn::Variant variant = nn::Variant::Regress;
    double gamma = 0.0;
    std::vector<nn::GammaTrial> trials;
    std::size_t best_epoch = 0;
    double best_dev_mae = 0.0;
    std::filesystem::path checkpoint;
    std::filesystem::path history;
};

TrainSummary run_train(const RunConfig &config, nn::Variant variant);

struct EvalRow {
    std::string name;
    eval::EvalReport report;
};

/// `model` is a checkpoint directory, a variant name with a trained
/// checkpoint, "baselines" for the whole suite, or one baseline name.
std::vector<EvalRow> run_eval(const RunConfig &config, const std::string &model);

struct StatsRow {
    std::string feature;
    eval::KwResult kw;
    eval::DependencyResult dependency;
};

std::vector<StatsRow> run_stats(const RunConfig &config, const std::optional<std::filesystem::path> &checkpoint);

struct Prediction {
    double count = 0.0;
    double log_value = 0.0;
    std::vector<std::int64_t> thresholds;
    std::vector<double> probabilities;
    std::size_t known_tokens = 0;
};

/// `feature_sidecar` is a JSON object of raw feature values by name.
Prediction run_predict(const std::filesystem::path &checkpoint, const std::string &text,
                       const std::optional<std::filesystem::path> &feature_sidecar);

/// FNV-1a 64 of a file's bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path &path);

}  // namespace petition::pipeline
