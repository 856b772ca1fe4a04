// Command-line front end: prepare, train, eval, stats, predict.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "petition/errors.hpp"
#include "petition/pipeline.hpp"

namespace {

namespace pl = petition::pipeline;

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

pl::RunConfig configure(const Globals &g) {
    if (g.config.empty()) throw petition::ValidationError("--config is required for this command");
    auto c = pl::load_config(g.config);
    if (g.seed) {
        c.seed = *g.seed;
        c.train.seed = *g.seed;
        c.baseline.seed = *g.seed;
    }
    if (!g.out.empty()) c.output_dir = g.out;
    return c;
}

std::string fmt(double v, const char *spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Petition popularity prediction"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON run config");
    app.add_option("--seed", g.seed, "Overrides the config seed");
    app.add_option("--out", g.out, "Overrides the output directory");

    auto *prepare = app.add_subcommand("prepare", "Build splits, vocabulary and features");

    std::string variant;
    auto *train = app.add_subcommand("train", "Train one CNN variant");
    train->add_option("--variant", variant, "regress | regress+ord | regress+feat | regress+ord+feat | regress+ord+feat+extra")
        ->required();

    std::string model;
    auto *evaluate = app.add_subcommand("eval", "Evaluate a checkpoint or baseline on the test split");
    evaluate->add_option("--model", model, "Checkpoint directory, variant name, 'baselines' or a baseline name")
        ->required();

    std::string stats_model;
    auto *stats = app.add_subcommand("stats", "Feature significance and hidden-feature dependency table");
    stats->add_option("--model", stats_model, "Checkpoint directory (default: the regress+ord model)");

    std::string predict_model, text, sidecar;
    auto *predict = app.add_subcommand("predict", "Predict the signature count of one text");
    predict->add_option("--model", predict_model, "Checkpoint directory, or a variant name with --config");
    predict->add_option("--text", text, "Petition text")->required();
    predict->add_option("--features", sidecar, "JSON object of raw hand-feature values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (prepare->parsed()) {
            const auto s = pl::run_prepare(configure(g));
            std::cout << "loaded=" << s.loaded << " dropped=" << s.dropped << " train=" << s.train << " dev=" << s.dev
                      << " test=" << s.test << " vocab=" << s.vocab_size << '\n'
                      << "manifest=" << s.manifest.string() << '\n';
        } else if (train->parsed()) {
            const auto s = pl::run_train(configure(g), petition::nn::parse_variant(variant));
            for (const auto &t : s.trials) std::cout << "gamma=" << t.gamma << " dev_mae=" << fmt(t.dev_mae) << '\n';
            std::cout << "variant=" << petition::nn::to_string(s.variant) << " gamma=" << s.gamma
                      << " best_epoch=" << s.best_epoch << " dev_mae=" << fmt(s.best_dev_mae) << '\n'
                      << "checkpoint=" << s.checkpoint.string() << '\n'
                      << "history=" << s.history.string() << '\n';
        } else if (evaluate->parsed()) {
            const auto config = configure(g);
            for (const auto &r : pl::run_eval(config, model)) {
                std::cout << r.name << " mae=" << fmt(r.report.mae) << " mape=" << fmt(r.report.mape)
                          << " macro_f=" << fmt(r.report.macro_f) << '\n';
            }
            std::cout << "table=" << (pl::reports_dir(config) / "results.txt").string() << '\n';
        } else if (stats->parsed()) {
            const auto config = configure(g);
            const auto rows = pl::run_stats(
                config, stats_model.empty() ? std::nullopt : std::optional<std::filesystem::path>(stats_model));
            std::cout << rows.size() << " features analysed\n"
                      << "table=" << (pl::reports_dir(config) / "stats.txt").string() << '\n';
        } else if (predict->parsed()) {
            std::filesystem::path ck = predict_model;
            if (predict_model.empty() || !std::filesystem::exists(ck / "manifest.json")) {
                if (g.config.empty()) throw petition::ValidationError("predict needs --model <checkpoint dir> or --config");
                const auto config = configure(g);
                const auto v = petition::nn::parse_variant(predict_model.empty() ? "regress+ord" : predict_model);
                ck = pl::model_dir(config, v) / "checkpoint";
            }
            const auto p = pl::run_predict(
                ck, text, sidecar.empty() ? std::nullopt : std::optional<std::filesystem::path>(sidecar));
            std::cout << "predicted_count=" << fmt(p.count, "%.2f") << '\n';
            for (std::size_t k = 0; k < p.thresholds.size(); ++k) {
                std::cout << "p(count>=" << p.thresholds[k] << ")=" << fmt(p.probabilities[k]) << '\n';
            }
        }
    } catch (const petition::NumericError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const petition::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
