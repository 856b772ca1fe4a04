#include "petition/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "petition/checkpoint.hpp"
#include "petition/errors.hpp"
#include "petition/features.hpp"
#include "petition/text.hpp"

namespace petition::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kPreparedFormatVersion = 1;
constexpr const char *kSplits[] = {"train", "dev", "test"};

std::function<void(const std::string &)> &warning_sink() {
    static std::function<void(const std::string &)> sink = [](const std::string &m) {
        std::cerr << "warning: " << m << '\n';
    };
    return sink;
}

std::string lower(std::string s) {
    for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Every read of a prepared artifact goes through here so tests can audit it.
std::string read_artifact(const fs::path &dir, const std::string &name) {
    const fs::path path = dir / name;
    if (!fs::exists(path)) {
        throw ValidationError("missing prepared artifact '" + path.string() + "'; run `petition prepare` first");
    }
    access_log().reads.push_back(name);
    return slurp(path);
}

std::vector<json> json_lines(const std::string &content, const std::string &source) {
    std::vector<json> out;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception &e) {
            throw ParseError(source, line_no, e.what());
        }
    }
    return out;
}

fs::path resolve(const fs::path &p, const fs::path &base) { return p.is_absolute() ? p : base / p; }

std::optional<fs::path> optional_path(const json &j, const char *key, const fs::path &base) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return resolve(it->get<std::string>(), base);
}

void reject_unknown(const json &j, std::initializer_list<std::string_view> known, const std::string &where) {
    for (const auto &[key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("config: unknown key '" + key + "' in " + where);
        }
    }
}

// Prepared-artifact readers.

struct Doc {
    std::string id;
    std::string text;
};

std::vector<Doc> read_docs(const fs::path &dir, const std::string &split) {
    const std::string name = "docs_" + split + ".jsonl";
    std::vector<Doc> out;
    for (const auto &r : json_lines(read_artifact(dir, name), name)) {
        out.push_back({r.at("id").get<std::string>(), r.at("text").get<std::string>()});
    }
    return out;
}

std::vector<std::int64_t> read_labels(const fs::path &dir, const std::string &split, const std::vector<Doc> &docs) {
    const std::string name = "labels_" + split + ".jsonl";
    const auto rows = json_lines(read_artifact(dir, name), name);
    if (rows.size() != docs.size()) throw ValidationError(name + ": row count does not match docs");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].at("id").get<std::string>() != docs[i].id) throw ValidationError(name + ": id order mismatch");
        out.push_back(rows[i].at("count").get<std::int64_t>());
    }
    return out;
}

std::vector<std::vector<double>> read_features(const fs::path &dir, const std::string &split,
                                               const std::vector<Doc> &docs) {
    const std::string name = "features_" + split + ".jsonl";
    const auto rows = json_lines(read_artifact(dir, name), name);
    if (rows.size() != docs.size()) throw ValidationError(name + ": row count does not match docs");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].at("id").get<std::string>() != docs[i].id) throw ValidationError(name + ": id order mismatch");
        out.push_back(rows[i].at("values").get<std::vector<double>>());
    }
    return out;
}

features::Standardizer read_standardizer(const fs::path &dir) {
    const json j = json::parse(read_artifact(dir, "standardizer.json"));
    return features::Standardizer::from_moments(j.at("mean").get<std::vector<double>>(),
                                                j.at("std").get<std::vector<double>>());
}

json read_manifest(const fs::path &dir) { return json::parse(read_artifact(dir, "manifest.json")); }

void check_prepared_scheme(const json &manifest, const RunConfig &config) {
    const auto thresholds = manifest.at("thresholds").get<std::vector<std::int64_t>>();
    if (thresholds != config.ordinal_scheme().thresholds() || manifest.at("log_base").get<std::string>() !=
                                                                   std::string(corpus::to_string(config.log_base))) {
        throw ValidationError("prepared artifacts were built for scheme '" + manifest.at("scheme").get<std::string>() +
                              "'; rerun `petition prepare` for scheme '" + config.scheme + "'");
    }
}

std::vector<nn::EncodedExample> encode(const std::vector<Doc> &docs, const text::Vocabulary &vocab,
                                       std::size_t max_length, std::size_t min_length) {
    std::vector<nn::EncodedExample> out;
    out.reserve(docs.size());
    for (const auto &d : docs) {
        nn::EncodedExample ex;
        ex.token_ids = text::pad_and_truncate(vocab.encode(text::tokenize(d.text)), min_length, max_length);
        out.push_back(std::move(ex));
    }
    return out;
}

void attach_targets(std::vector<nn::EncodedExample> &examples, const std::vector<std::int64_t> &counts,
                    const corpus::OrdinalScheme &scheme, corpus::LogBase base) {
    for (std::size_t i = 0; i < examples.size(); ++i) {
        examples[i].target.log_count = corpus::log_target(counts[i], base);
        examples[i].target.ordinal_bits = corpus::encode_ordinal(scheme, counts[i]);
    }
}

void attach_features(std::vector<nn::EncodedExample> &examples, const std::vector<std::vector<double>> &raw,
                     const features::Standardizer &standardizer) {
    for (std::size_t i = 0; i < examples.size(); ++i) examples[i].features = standardizer.apply(raw[i]);
}

std::vector<std::string> feature_names() {
    return {features::kFeatureNames.begin(), features::kFeatureNames.end()};
}

std::string model_label(const std::string &variant) { return "CNN_" + variant; }

const std::vector<std::string> &baseline_names() {
    static const std::vector<std::string> names{"Mean",    "Linear_BoW",   "Linear_GI",     "KRR_BoW",
                                                "KRR_feat", "KRR_BoW+feat", "Ordinal_LR_BoW"};
    return names;
}

std::vector<std::string> table_order() {
    std::vector<std::string> order = baseline_names();
    for (const auto v : nn::all_variants()) order.push_back(model_label(std::string(nn::to_string(v))));
    return order;
}

std::string file_stem(const std::string &name) {
    std::string s;
    for (const char c : name) s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '+' ? c : '_';
    return s;
}

void write_report_files(const RunConfig &config, const EvalRow &row) {
    eval::Metrics metrics;
    eval::add_report(metrics, row.name, row.report);
    const fs::path dir = reports_dir(config);
    eval::write_text(dir / ("eval_" + file_stem(row.name) + ".metrics"), eval::format_metrics(metrics));
}

/// Rebuilds the combined table from every metrics file in the reports directory.
void write_summary_table(const RunConfig &config, const std::vector<double> &edges) {
    const fs::path dir = reports_dir(config);
    std::map<std::string, std::map<std::string, std::string>> by_model;
    for (const auto &entry : fs::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.rfind("eval_", 0) != 0 || entry.path().extension() != ".metrics") continue;
        std::istringstream in(slurp(entry.path()));
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(0, eq);
            const auto dot = key.find('.');
            if (dot == std::string::npos) continue;
            by_model[key.substr(0, dot)][key.substr(dot + 1)] = line.substr(eq + 1);
        }
    }

    std::vector<std::string> header{"Model", "MAE", "MAPE", "macro-F"};
    for (std::size_t b = 0; b <= edges.size(); ++b) {
        const std::string lo = b == 0 ? "0" : eval::fixed(edges[b - 1], 0);
        const std::string hi = b == edges.size() ? "inf" : eval::fixed(edges[b], 0);
        header.push_back("F[" + lo + "," + hi + ")");
    }
    auto cell = [](const std::map<std::string, std::string> &m, const std::string &key) {
        const auto it = m.find(key);
        return it == m.end() ? std::string("-") : eval::fixed(std::stod(it->second), 2);
    };

    std::vector<std::vector<std::string>> rows;
    auto emit = [&](const std::string &name, const std::map<std::string, std::string> &m) {
        std::vector<std::string> r{name, cell(m, "mae"), cell(m, "mape"), cell(m, "macro_f")};
        for (std::size_t b = 0; b <= edges.size(); ++b) r.push_back(cell(m, "f" + header[4 + b].substr(1)));
        rows.push_back(std::move(r));
    };
    std::set<std::string> done;
    for (const auto &name : table_order()) {
        const auto it = by_model.find(name);
        if (it == by_model.end()) continue;
        emit(name, it->second);
        done.insert(name);
    }
    for (const auto &[name, m] : by_model) {
        if (!done.contains(name)) emit(name, m);
    }
    eval::write_text(dir / "results.txt", eval::format_table(header, rows));
}

std::vector<double> to_counts(std::span<const double> log_values, corpus::LogBase base) {
    std::vector<double> out;
    out.reserve(log_values.size());
    for (const double v : log_values) out.push_back(corpus::inverse_log_target(v, base));
    return out;
}

text::Vocabulary load_checkpoint_vocab(const fs::path &dir, const nn::CheckpointMeta &meta) {
    const auto vocab = text::Vocabulary::load(dir / "vocab.txt");
    if (vocab.hash() != meta.vocab_hash) {
        throw ValidationError("checkpoint '" + dir.string() + "': vocabulary hash does not match its manifest");
    }
    return vocab;
}

std::vector<EvalRow> eval_checkpoint(const RunConfig &config, const fs::path &ck_dir) {
    const auto ck = nn::load_checkpoint(ck_dir);
    const auto scheme = config.ordinal_scheme();
    if (ck.meta.thresholds != scheme.thresholds()) {
        throw ValidationError("checkpoint scheme '" + ck.meta.scheme_name + "' does not match configured scheme '" +
                              config.scheme + "'");
    }
    if (ck.meta.log_base != config.log_base) throw ValidationError("checkpoint log base does not match config");
    const auto vocab = load_checkpoint_vocab(ck_dir, ck.meta);

    const fs::path dir = prepared_dir(config);
    check_prepared_scheme(read_manifest(dir), config);
    const auto docs = read_docs(dir, "test");
    auto examples = encode(docs, vocab, ck.meta.max_length, ck.model.config().max_width());
    if (ck.model.config().feature_dim > 0) {
        const auto standardizer = features::Standardizer::from_moments(ck.meta.feature_mean, ck.meta.feature_std);
        attach_features(examples, read_features(dir, "test", docs), standardizer);
    }
    const auto counts = read_labels(dir, "test", docs);

    const auto pred_log = nn::predict_log(ck.model, examples);
    std::vector<double> truth_log, truth_counts;
    for (const auto c : counts) {
        truth_log.push_back(corpus::log_target(c, config.log_base));
        truth_counts.push_back(static_cast<double>(c));
    }
    const auto pred_counts = to_counts(pred_log, config.log_base);
    const auto edges = eval::fscore_edges(scheme);
    EvalRow row{model_label(ck.meta.variant),
                eval::evaluate(pred_log, truth_log, pred_counts, truth_counts, edges, config.metric_space)};
    if (row.report.mape_excluded > 0) {
        warn(std::to_string(row.report.mape_excluded) + " test petitions with zero log target excluded from MAPE");
    }
    return {row};
}

std::vector<EvalRow> eval_baselines(const RunConfig &config, const std::optional<std::string> &only) {
    const fs::path dir = prepared_dir(config);
    check_prepared_scheme(read_manifest(dir), config);
    const auto scheme = config.ordinal_scheme();

    std::array<std::vector<Doc>, 3> docs;
    std::array<std::vector<std::vector<std::string>>, 3> tokens;
    std::array<std::vector<std::vector<double>>, 3> raw;
    for (std::size_t s = 0; s < 3; ++s) {
        docs[s] = read_docs(dir, kSplits[s]);
        for (const auto &d : docs[s]) tokens[s].push_back(text::tokenize(d.text));
        raw[s] = read_features(dir, kSplits[s], docs[s]);
    }
    const auto standardizer = read_standardizer(dir);

    text::TfidfVectorizer tfidf;
    tfidf.fit(tokens[0]);
    std::optional<baselines::GiLexicon> gi;
    if (config.lexicons.gi) {
        gi = baselines::load_gi_lexicon(*config.lexicons.gi);
    } else if (!only || *only == "Linear_GI") {
        warn("no GI lexicon configured; Linear_GI skipped");
    }

    std::array<baselines::SplitDesign, 3> design;
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < docs[s].size(); ++i) {
            design[s].bow.push_back(tfidf.transform(tokens[s][i]));
            if (gi) design[s].gi.push_back(text::SparseVector::from_dense(baselines::gi_features(tokens[s][i], *gi)));
            design[s].feat.push_back(text::SparseVector::from_dense(standardizer.apply(raw[s][i])));
        }
    }

    const auto train_counts = read_labels(dir, "train", docs[0]);
    const auto dev_counts = read_labels(dir, "dev", docs[1]);
    std::vector<double> y_train, y_dev;
    std::vector<std::vector<std::uint8_t>> bits_train;
    for (const auto c : train_counts) {
        y_train.push_back(corpus::log_target(c, config.log_base));
        bits_train.push_back(corpus::encode_ordinal(scheme, c));
    }
    for (const auto c : dev_counts) y_dev.push_back(corpus::log_target(c, config.log_base));

    auto options = config.baseline;
    options.seed = config.seed;
    if (only) {
        options.run_krr = options.run_krr && only->rfind("KRR", 0) == 0;
        options.run_ordinal = options.run_ordinal && *only == "Ordinal_LR_BoW";
    }
    const auto preds = baselines::baseline_suite(design[0], design[1], design[2], y_train, y_dev, bits_train, scheme,
                                                 config.log_base, options);

    // Test labels are read only after every model is fitted and selected.
    const auto test_counts = read_labels(dir, "test", docs[2]);
    std::vector<double> truth_log, truth_counts;
    for (const auto c : test_counts) {
        truth_log.push_back(corpus::log_target(c, config.log_base));
        truth_counts.push_back(static_cast<double>(c));
    }
    const auto edges = eval::fscore_edges(scheme);
    std::vector<EvalRow> rows;
    for (const auto &p : preds) {
        if (only && p.name != *only) continue;
        rows.push_back({p.name, eval::evaluate(p.test_log, truth_log, p.test_counts, truth_counts, edges,
                                               config.metric_space)});
    }
    if (only && rows.empty()) throw ValidationError("baseline '" + *only + "' could not be run with this config");
    return rows;
}

void write_history(const fs::path &path, const nn::TrainResult &result) {
    std::string s = "epoch\ttrain_loss\ttrain_regression\ttrain_auxiliary\tdev_mae\n";
    for (const auto &r : result.history) {
        s += std::to_string(r.epoch) + "\t" + num(r.train_loss) + "\t" + num(r.train_regression) + "\t" +
             num(r.train_auxiliary) + "\t" + num(r.dev_mae) + "\n";
    }
    eval::write_text(path, s);
}

}  // namespace

bool AccessLog::touched(std::string_view name) const {
    return std::find(reads.begin(), reads.end(), name) != reads.end();
}

AccessLog &access_log() {
    static AccessLog log;
    return log;
}

void set_warning_sink(std::function<void(const std::string &)> sink) { warning_sink() = std::move(sink); }

void warn(const std::string &message) {
    if (warning_sink()) warning_sink()(message);
}

std::string file_hash(const fs::path &path) { return hex16(fnv1a(slurp(path))); }

corpus::OrdinalScheme RunConfig::ordinal_scheme() const {
    if (scheme == "uk") return corpus::OrdinalScheme::uk();
    if (scheme == "us") return corpus::OrdinalScheme::us();
    throw ValidationError("config: scheme must be 'uk' or 'us', got '" + scheme + "'");
}

std::optional<std::int64_t> RunConfig::drop_threshold() const {
    if (scheme == "us") return 150;
    return std::nullopt;
}

void RunConfig::validate() const {
    (void)ordinal_scheme();
    auto need = [](const std::optional<fs::path> &p, const char *what) {
        if (p && !fs::exists(*p)) throw ValidationError(std::string("config: ") + what + " '" + p->string() + "' does not exist");
    };
    need(petitions, "petitions");
    need(embeddings, "embeddings");
    need(lexicons.subjective, "lexicons.subjective");
    need(lexicons.positive, "lexicons.positive");
    need(lexicons.negative, "lexicons.negative");
    need(lexicons.bias, "lexicons.bias");
    need(lexicons.gi, "lexicons.gi");
    need(annotations, "annotations");
    need(external_scores, "external_scores");
    if (embed_dim == 0) throw ValidationError("config: embed_dim must be positive");
    if (max_length == 0) throw ValidationError("config: max_length must be positive");
    if (gamma_grid.empty()) throw ValidationError("config: gamma_grid must not be empty");
    for (const double g : gamma_grid) {
        if (!(g >= 0.0)) throw ValidationError("config: gamma values must be >= 0");
    }
    for (const double l : baseline.lambda_grid) {
        if (!(l > 0.0)) throw ValidationError("config: baseline lambdas must be > 0");
    }
    for (const double s : baseline.sigma_multipliers) {
        if (!(s > 0.0)) throw ValidationError("config: sigma multipliers must be > 0");
    }
    if (baseline.lambda_grid.empty() || baseline.sigma_multipliers.empty()) {
        throw ValidationError("config: baseline grids must not be empty");
    }
    train.validate();
}

RunConfig parse_config(std::string_view json_text, const fs::path &base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");

    RunConfig c;
    try {
        reject_unknown(j,
                       {"petitions", "embeddings", "lexicons", "annotations", "external_scores", "output_dir", "scheme",
                        "log_base", "seed", "embed_dim", "min_count", "max_length", "train", "gamma_grid", "baselines",
                        "metrics"},
                       "config");
        if (!j.contains("petitions")) throw ValidationError("config: 'petitions' is required");
        c.petitions = resolve(j.at("petitions").get<std::string>(), base_dir);
        c.embeddings = optional_path(j, "embeddings", base_dir);
        c.annotations = optional_path(j, "annotations", base_dir);
        c.external_scores = optional_path(j, "external_scores", base_dir);
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
        else c.output_dir = base_dir / "out";
        if (j.contains("lexicons")) {
            const auto &l = j.at("lexicons");
            reject_unknown(l, {"subjective", "positive", "negative", "bias", "gi"}, "lexicons");
            c.lexicons.subjective = optional_path(l, "subjective", base_dir);
            c.lexicons.positive = optional_path(l, "positive", base_dir);
            c.lexicons.negative = optional_path(l, "negative", base_dir);
            c.lexicons.bias = optional_path(l, "bias", base_dir);
            c.lexicons.gi = optional_path(l, "gi", base_dir);
        }
        c.scheme = lower(j.value("scheme", c.scheme));
        if (j.contains("log_base")) {
            const auto &lb = j.at("log_base");
            c.log_base = corpus::parse_log_base(lb.is_number() ? std::to_string(lb.get<int>()) : lb.get<std::string>());
        }
        c.seed = j.value("seed", c.seed);
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.min_count = j.value("min_count", c.min_count);
        c.max_length = j.value("max_length", c.max_length);
        c.gamma_grid = j.value("gamma_grid", c.gamma_grid);

        if (j.contains("train")) {
            const auto &t = j.at("train");
            reject_unknown(t,
                           {"epochs", "batch_size", "patience", "widths", "filters_per_width", "hidden_sizes",
                            "fusion_dim", "learning_rate", "elu_alpha"},
                           "train");
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.patience = t.value("patience", c.train.patience);
            c.train.widths = t.value("widths", c.train.widths);
            c.train.filters_per_width = t.value("filters_per_width", c.train.filters_per_width);
            c.train.hidden_sizes = t.value("hidden_sizes", c.train.hidden_sizes);
            c.train.fusion_dim = t.value("fusion_dim", c.train.fusion_dim);
            c.train.adam.lr = t.value("learning_rate", c.train.adam.lr);
            c.train.elu_alpha = t.value("elu_alpha", c.train.elu_alpha);
        }
        if (j.contains("baselines")) {
            const auto &b = j.at("baselines");
            reject_unknown(b, {"lambda_grid", "sigma_multipliers", "krr_cap", "run_krr", "run_ordinal"}, "baselines");
            c.baseline.lambda_grid = b.value("lambda_grid", c.baseline.lambda_grid);
            c.baseline.sigma_multipliers = b.value("sigma_multipliers", c.baseline.sigma_multipliers);
            c.baseline.krr_cap = b.value("krr_cap", c.baseline.krr_cap);
            c.baseline.run_krr = b.value("run_krr", c.baseline.run_krr);
            c.baseline.run_ordinal = b.value("run_ordinal", c.baseline.run_ordinal);
        }
        if (j.contains("metrics")) {
            const auto &m = j.at("metrics");
            reject_unknown(m, {"space"}, "metrics");
            const std::string space = m.value("space", std::string("log"));
            if (space == "log") c.metric_space = eval::MetricSpace::Log;
            else if (space == "raw") c.metric_space = eval::MetricSpace::Raw;
            else throw ValidationError("config: metrics.space must be 'log' or 'raw'");
        }
    } catch (const json::exception &e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.train.seed = c.seed;
    c.train.log_base = c.log_base;
    c.baseline.seed = c.seed;
    return c;
}

RunConfig load_config(const fs::path &path) {
    const auto base = fs::absolute(path).parent_path();
    return parse_config(slurp(path), base);
}

fs::path prepared_dir(const RunConfig &config) { return config.output_dir / "prepared"; }
fs::path model_dir(const RunConfig &config, nn::Variant variant) {
    return config.output_dir / "models" / std::string(nn::to_string(variant));
}
fs::path reports_dir(const RunConfig &config) { return config.output_dir / "reports"; }

PrepareSummary run_prepare(const RunConfig &config) {
    config.validate();
    const auto scheme = config.ordinal_scheme();

    corpus::IngestOptions ingest;
    ingest.drop_at_or_below = config.drop_threshold();
    const auto loaded = corpus::load_petitions(config.petitions, ingest);
    const auto &petitions = loaded.petitions;
    if (loaded.dropped > 0) {
        warn("dropped " + std::to_string(loaded.dropped) + " petitions at or below " +
             std::to_string(*ingest.drop_at_or_below) + " signatures");
    }
    if (petitions.size() < 3) throw ValidationError("prepare: need at least 3 petitions, got " + std::to_string(petitions.size()));
    {
        std::set<std::string> ids;
        for (const auto &p : petitions) {
            if (!ids.insert(p.id).second) throw ValidationError("prepare: duplicate petition id '" + p.id + "'");
        }
    }

    const auto split = corpus::chronological_indices(petitions);
    std::vector<std::vector<std::string>> tokens(petitions.size());
    for (std::size_t i = 0; i < petitions.size(); ++i) tokens[i] = text::tokenize(petitions[i].full_text());

    std::vector<std::vector<std::string>> train_tokens;
    for (const auto i : split.train) train_tokens.push_back(tokens[i]);
    const auto vocab = text::Vocabulary::fit(train_tokens, config.min_count);
    text::TfidfVectorizer tfidf;
    tfidf.fit(train_tokens);

    std::vector<text::SparseVector> vectors;
    std::vector<corpus::Date> dates;
    for (std::size_t i = 0; i < petitions.size(); ++i) {
        vectors.push_back(tfidf.transform(tokens[i]));
        dates.push_back(petitions[i].start_date);
    }
    const auto fresh = features::freshness_all(vectors, dates);

    auto lexicons = features::LexiconSet::defaults();
    auto load_list = [](const std::optional<fs::path> &p, features::WordSet &into, const char *what) {
        if (p) into = features::load_word_list(*p);
        else warn(std::string("no ") + what + " lexicon configured; its feature is 0");
    };
    load_list(config.lexicons.subjective, lexicons.gi_subjective, "subjective");
    load_list(config.lexicons.positive, lexicons.gi_positive, "positive");
    load_list(config.lexicons.negative, lexicons.gi_negative, "negative");
    load_list(config.lexicons.bias, lexicons.bias_words, "bias");

    std::unordered_map<std::string, features::AnnotatedPetition> annotations;
    if (config.annotations) annotations = features::load_annotations(*config.annotations);
    else warn("no annotations configured; syntactic counts are 0");
    std::unordered_map<std::string, features::ExternalScores> external;
    if (config.external_scores) external = features::load_external_scores(*config.external_scores);
    else warn("no external scores configured; Act, Csc, Pbias and L_R are 0");

    features::AssembleOptions assemble_options;
    assemble_options.details_applicable = config.scheme == "uk";
    std::vector<std::vector<double>> raw(petitions.size());
    for (std::size_t i = 0; i < petitions.size(); ++i) {
        const auto a = annotations.find(petitions[i].id);
        const auto e = external.find(petitions[i].id);
        const auto fv = features::assemble_with_freshness(
            petitions[i], a == annotations.end() ? nullptr : &a->second, lexicons, fresh[i],
            e == external.end() ? features::ExternalScores{} : e->second, assemble_options);
        raw[i].assign(fv.values.begin(), fv.values.end());
    }

    std::vector<std::vector<double>> train_raw;
    for (const auto i : split.train) train_raw.push_back(raw[i]);
    features::Standardizer standardizer;
    standardizer.fit(train_raw);

    const fs::path dir = prepared_dir(config);
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto write = [&](const std::string &name, const std::string &content) {
        eval::write_text(dir / name, content);
        files.push_back(name);
    };

    const std::array<const std::vector<std::size_t> *, 3> parts{&split.train, &split.dev, &split.test};
    for (std::size_t s = 0; s < 3; ++s) {
        std::string docs, labels, feats;
        for (const auto i : *parts[s]) {
            const auto &p = petitions[i];
            docs += json{{"id", p.id}, {"date", corpus::format_date(p.start_date)}, {"text", p.full_text()}}.dump() + "\n";
            labels += json{{"id", p.id}, {"count", p.signature_count}}.dump() + "\n";
            feats += json{{"id", p.id}, {"values", raw[i]}}.dump() + "\n";
        }
        write(std::string("docs_") + kSplits[s] + ".jsonl", docs);
        write(std::string("labels_") + kSplits[s] + ".jsonl", labels);
        write(std::string("features_") + kSplits[s] + ".jsonl", feats);
    }
    vocab.save(dir / "vocab.txt");
    files.push_back("vocab.txt");
    write("standardizer.json",
          json{{"names", feature_names()}, {"mean", standardizer.mean()}, {"std", standardizer.stddev()}}.dump(2) + "\n");

    // Binned counts per split for external histogram plotting.
    std::string hist = "split\tbin_low\tbin_high\tcount\n";
    for (std::size_t s = 0; s < 3; ++s) {
        std::map<int, std::size_t> bins;
        for (const auto i : *parts[s]) ++bins[static_cast<int>(std::floor(std::log10(static_cast<double>(petitions[i].signature_count))))];
        for (const auto &[b, n] : bins) {
            hist += std::string(kSplits[s]) + "\t" + eval::fixed(std::pow(10.0, b), 0) + "\t" +
                    eval::fixed(std::pow(10.0, b + 1), 0) + "\t" + std::to_string(n) + "\n";
        }
    }
    write("histogram.tsv", hist);

    json inputs = json::object();
    auto add_input = [&](const char *name, const std::optional<fs::path> &p) {
        if (p) inputs[name] = json{{"path", p->string()}, {"fnv1a64", file_hash(*p)}};
    };
    add_input("petitions", config.petitions);
    add_input("lexicon_subjective", config.lexicons.subjective);
    add_input("lexicon_positive", config.lexicons.positive);
    add_input("lexicon_negative", config.lexicons.negative);
    add_input("lexicon_bias", config.lexicons.bias);
    add_input("annotations", config.annotations);
    add_input("external_scores", config.external_scores);
    json artifacts = json::object();
    for (const auto &f : files) artifacts[f] = file_hash(dir / f);

    const json manifest{
        {"format_version", kPreparedFormatVersion},
        {"scheme", config.scheme},
        {"thresholds", scheme.thresholds()},
        {"log_base", std::string(corpus::to_string(config.log_base))},
        {"seed", config.seed},
        {"min_count", config.min_count},
        {"loaded", petitions.size() + loaded.dropped},
        {"dropped", loaded.dropped},
        {"splits", {{"train", split.train.size()}, {"dev", split.dev.size()}, {"test", split.test.size()}}},
        {"vocab_size", vocab.size()},
        {"vocab_hash", hex16(vocab.hash())},
        {"feature_names", feature_names()},
        {"inputs", inputs},
        {"artifacts", artifacts},
    };
    eval::write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    PrepareSummary summary;
    summary.loaded = petitions.size() + loaded.dropped;
    summary.dropped = loaded.dropped;
    summary.train = split.train.size();
    summary.dev = split.dev.size();
    summary.test = split.test.size();
    summary.vocab_size = vocab.size();
    summary.manifest = dir / "manifest.json";
    return summary;
}

TrainSummary run_train(const RunConfig &config, nn::Variant variant) {
    config.validate();
    const auto scheme = config.ordinal_scheme();
    const fs::path dir = prepared_dir(config);
    check_prepared_scheme(read_manifest(dir), config);

    const auto vocab = text::Vocabulary::load(dir / "vocab.txt");
    access_log().reads.push_back("vocab.txt");
    const auto train_docs = read_docs(dir, "train");
    const auto dev_docs = read_docs(dir, "dev");

    nn::TrainConfig tc = nn::TrainConfig::for_variant(variant, config.train);
    tc.seed = config.seed;
    tc.log_base = config.log_base;
    std::size_t min_len = 1;
    for (const auto w : tc.widths) min_len = std::max(min_len, w);
    auto train_set = encode(train_docs, vocab, config.max_length, min_len);
    auto dev_set = encode(dev_docs, vocab, config.max_length, min_len);
    attach_targets(train_set, read_labels(dir, "train", train_docs), scheme, config.log_base);
    attach_targets(dev_set, read_labels(dir, "dev", dev_docs), scheme, config.log_base);

    nn::CheckpointMeta meta;
    meta.variant = std::string(nn::to_string(variant));
    meta.vocab_hash = vocab.hash();
    meta.thresholds = scheme.thresholds();
    meta.scheme_name = config.scheme;
    meta.log_base = config.log_base;
    meta.max_length = config.max_length;
    if (tc.use_features) {
        const auto standardizer = read_standardizer(dir);
        attach_features(train_set, read_features(dir, "train", train_docs), standardizer);
        attach_features(dev_set, read_features(dir, "dev", dev_docs), standardizer);
        meta.feature_mean = standardizer.mean();
        meta.feature_std = standardizer.stddev();
        meta.feature_names = feature_names();
    }

    text::EmbeddingTable embeddings;
    if (config.embeddings) {
        text::EmbeddingLoadStats stats;
        embeddings = text::load_embeddings(*config.embeddings, vocab, config.embed_dim, config.seed + 1, &stats);
        if (stats.missing > 0) {
            warn(std::to_string(stats.missing) + " of " + std::to_string(vocab.size() - 2) +
                 " vocabulary words have no pretrained vector; using random rows");
        }
    } else {
        embeddings = text::random_embeddings(vocab, config.embed_dim, config.seed + 1);
    }

    TrainSummary summary;
    summary.variant = variant;
    nn::TrainResult result;
    if (tc.use_ordinal) {
        auto search = nn::tune_gamma(tc, config.gamma_grid, train_set, dev_set, embeddings, scheme.size());
        summary.trials = search.trials;
        result = std::move(search.best);
    } else {
        result = nn::train(tc, train_set, dev_set, embeddings, scheme.size());
    }
    summary.gamma = result.gamma;
    summary.best_epoch = result.best_epoch;
    summary.best_dev_mae = result.best_dev_mae;
    meta.gamma = result.gamma;

    const fs::path out = model_dir(config, variant);
    summary.checkpoint = out / "checkpoint";
    nn::save_checkpoint(summary.checkpoint, result.model, meta);
    vocab.save(summary.checkpoint / "vocab.txt");
    summary.history = out / "history.tsv";
    write_history(summary.history, result);

    std::string gamma_file = "gamma\tdev_mae\n";
    for (const auto &t : summary.trials) gamma_file += num(t.gamma) + "\t" + num(t.dev_mae) + "\n";
    gamma_file += "chosen\t" + num(summary.gamma) + "\n";
    eval::write_text(out / "gamma.tsv", gamma_file);
    return summary;
}

std::vector<EvalRow> run_eval(const RunConfig &config, const std::string &model) {
    config.validate();
    std::vector<EvalRow> rows;
    const std::string key = lower(model);
    if (key == "baselines" || key == "baseline") {
        rows = eval_baselines(config, std::nullopt);
    } else {
        const auto &names = baseline_names();
        const auto it = std::find_if(names.begin(), names.end(), [&](const std::string &n) { return lower(n) == key; });
        if (it != names.end()) {
            rows = eval_baselines(config, *it);
        } else {
            fs::path ck = model;
            try {
                const auto variant = nn::parse_variant(model);
                if (!fs::exists(ck / "manifest.json")) ck = model_dir(config, variant) / "checkpoint";
            } catch (const ValidationError &) {
            }
            if (!fs::exists(ck / "manifest.json")) {
                throw ValidationError("no checkpoint or baseline named '" + model + "'; train it first or pass a checkpoint directory");
            }
            rows = eval_checkpoint(config, ck);
        }
    }
    for (const auto &r : rows) write_report_files(config, r);
    write_summary_table(config, eval::fscore_edges(config.ordinal_scheme()));
    return rows;
}

std::vector<StatsRow> run_stats(const RunConfig &config, const std::optional<fs::path> &checkpoint) {
    config.validate();
    const fs::path ck_dir = checkpoint ? *checkpoint : model_dir(config, nn::Variant::RegressOrd) / "checkpoint";
    if (!fs::exists(ck_dir / "manifest.json")) {
        throw ValidationError("no checkpoint at '" + ck_dir.string() + "'; run `petition train --variant regress+ord` first");
    }
    const auto ck = nn::load_checkpoint(ck_dir);
    if (ck.meta.thresholds != config.ordinal_scheme().thresholds()) {
        throw ValidationError("checkpoint scheme '" + ck.meta.scheme_name + "' does not match configured scheme '" +
                              config.scheme + "'");
    }
    if (ck.meta.variant != "regress+ord") {
        warn("dependency analysis expects a regress+ord checkpoint, got '" + ck.meta.variant + "'");
    }
    const auto vocab = load_checkpoint_vocab(ck_dir, ck.meta);
    const fs::path dir = prepared_dir(config);
    check_prepared_scheme(read_manifest(dir), config);

    // Kruskal-Wallis over ordinal groups on the training split.
    const auto train_docs = read_docs(dir, "train");
    const auto train_raw = read_features(dir, "train", train_docs);
    const auto train_counts = read_labels(dir, "train", train_docs);
    auto names = feature_names();
    std::vector<std::size_t> columns;
    for (std::size_t f = 0; f < names.size(); ++f) {
        if (config.scheme == "us" && names[f] == "Add") continue;
        columns.push_back(f);
    }
    auto select = [&](const std::vector<std::vector<double>> &rows) {
        std::vector<std::vector<double>> out;
        out.reserve(rows.size());
        for (const auto &r : rows) {
            std::vector<double> s;
            for (const auto c : columns) s.push_back(r[c]);
            out.push_back(std::move(s));
        }
        return out;
    };
    std::vector<std::string> used_names;
    for (const auto c : columns) used_names.push_back(names[c]);
    const auto kw = eval::feature_significance_table(select(train_raw), train_counts, config.ordinal_scheme(), used_names);
    for (const auto &row : kw) {
        if (row.groups_dropped > 0) {
            warn(std::to_string(row.groups_dropped) + " empty ordinal groups dropped from the Kruskal-Wallis tests");
            break;
        }
    }

    // Hidden-feature dependencies on the test split; no labels needed.
    const auto test_docs = read_docs(dir, "test");
    const auto test_raw = read_features(dir, "test", test_docs);
    auto examples = encode(test_docs, vocab, ck.meta.max_length, ck.model.config().max_width());
    if (ck.model.config().feature_dim > 0) {
        attach_features(examples, test_raw, features::Standardizer::from_moments(ck.meta.feature_mean, ck.meta.feature_std));
    }
    const auto hidden = nn::hidden_representations(ck.model, examples);
    const auto deps = eval::dependency_analysis(hidden, select(test_raw), used_names);

    std::vector<StatsRow> out;
    std::vector<std::vector<std::string>> table;
    eval::Metrics metrics;
    for (std::size_t i = 0; i < used_names.size(); ++i) {
        out.push_back({used_names[i], kw[i].kw, deps[i]});
        table.push_back({used_names[i], eval::fixed(kw[i].kw.h, 2), kw[i].stars, eval::stars(deps[i].p_hidden)});
        metrics.emplace_back("stats." + used_names[i] + ".h", num(kw[i].kw.h));
        metrics.emplace_back("stats." + used_names[i] + ".p", num(kw[i].kw.p));
        metrics.emplace_back("stats." + used_names[i] + ".r2", num(deps[i].r2));
        metrics.emplace_back("stats." + used_names[i] + ".p_hidden", num(deps[i].p_hidden));
        metrics.emplace_back("stats." + used_names[i] + ".ridge_fallback", deps[i].ridge_fallback ? "1" : "0");
    }
    const fs::path rdir = reports_dir(config);
    eval::write_text(rdir / "stats.txt", eval::format_table({"Feature", "H", "p", "p_hidden"}, table));
    eval::write_text(rdir / "stats.metrics", eval::format_metrics(metrics));
    return out;
}

Prediction run_predict(const fs::path &checkpoint, const std::string &text_input,
                       const std::optional<fs::path> &feature_sidecar) {
    const auto ck = nn::load_checkpoint(checkpoint);
    const auto vocab = load_checkpoint_vocab(checkpoint, ck.meta);

    Prediction p;
    p.thresholds = ck.meta.thresholds;
    const auto tokens = text::tokenize(text_input);
    auto ids = vocab.encode(tokens);
    p.known_tokens = static_cast<std::size_t>(
        std::count_if(ids.begin(), ids.end(), [](std::uint32_t id) { return id != text::Vocabulary::kUnknown; }));
    if (p.known_tokens == 0) warn("no known tokens in the input text; predicting from the unknown/pad path");
    ids = text::pad_and_truncate(std::move(ids), ck.model.config().max_width(), ck.meta.max_length);

    std::vector<double> feats;
    if (ck.model.config().feature_dim > 0) {
        const auto &names = ck.meta.feature_names;
        std::vector<double> raw = ck.meta.feature_mean;
        if (feature_sidecar) {
            json j;
            try {
                j = json::parse(slurp(*feature_sidecar));
            } catch (const json::exception &e) {
                throw ValidationError(feature_sidecar->string() + ": malformed JSON: " + e.what());
            }
            if (!j.is_object()) throw ValidationError(feature_sidecar->string() + ": expected an object of feature values");
            for (const auto &[key, value] : j.items()) {
                const auto it = std::find(names.begin(), names.end(), key);
                if (it == names.end()) throw ValidationError(feature_sidecar->string() + ": unknown feature '" + key + "'");
                if (!value.is_number()) throw ValidationError(feature_sidecar->string() + ": feature '" + key + "' is not a number");
                raw[static_cast<std::size_t>(it - names.begin())] = value.get<double>();
            }
            if (j.size() < names.size()) warn("feature sidecar is incomplete; missing features take training means");
        } else {
            warn("model uses hand features but no sidecar was given; using training means");
        }
        feats = features::Standardizer::from_moments(ck.meta.feature_mean, ck.meta.feature_std).apply(raw);
    }

    const auto trace = nn::forward(ck.model, ids,
                                   feats.empty() ? std::nullopt : std::optional<std::span<const double>>(feats), false);
    p.log_value = std::max(trace.y_hat, 0.0);
    p.count = nn::predict_count(trace.y_hat, ck.meta.log_base);
    if (!trace.ordinal_probs.empty()) {
        p.probabilities = trace.ordinal_probs;
    } else {
        // No ordinal heads: report the point prediction's threshold decisions.
        for (const auto t : p.thresholds) p.probabilities.push_back(p.count >= static_cast<double>(t) ? 1.0 : 0.0);
    }
    return p;
}

}  // namespace petition::pipeline
