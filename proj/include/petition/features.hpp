#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "petition/corpus.hpp"
#include "petition/text.hpp"

namespace petition::features {

enum class Feature : std::size_t {
    Add, Ind, Def, Fsp, Fpp, Spp, Tsp, Tpp, Subj, Pol, Bias,
    NNC, VBC, ADC, RBC, NEC, Fre, Act, Csc, Pbias, LR,
};

inline constexpr std::size_t kFeatureCount = 21;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "Add", "Ind", "Def", "Fsp", "Fpp", "Spp", "Tsp", "Tpp", "Subj", "Pol", "Bias",
    "NNC", "VBC", "ADC", "RBC", "NEC", "Fre", "Act", "Csc", "Pbias", "L_R",
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureDescriptions = {
    "Additional details", "Indefinite articles", "Definite articles", "First-person singular pronouns",
    "First-person plural pronouns", "Second-person pronouns", "Third-person singular pronouns",
    "Third-person plural pronouns", "Subjective words", "Polarity", "Biased words", "Nouns", "Verbs",
    "Adjectives", "Adverbs", "Named entities", "Freshness", "Title's action score",
    "Policy category popularity", "Political bias", "Left-right scale",
};

std::optional<Feature> parse_feature_name(std::string_view name);

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double &operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    [[nodiscard]] std::span<const double> span() const { return values; }

    bool operator==(const FeatureVector &) const = default;
};

using WordSet = std::unordered_set<std::string>;

struct LexiconSet {
    WordSet indefinite_articles;
    WordSet definite_articles;
    WordSet fsp;
    WordSet fpp;
    WordSet spp;
    WordSet tsp;
    WordSet tpp;
    WordSet gi_subjective;
    WordSet gi_positive;
    WordSet gi_negative;
    WordSet bias_words;

    /// Built-in article and pronoun classes; lexicon-file sets left empty.
    static LexiconSet defaults();
};

/// One word per line, lowercased; blank lines and '#' comments skipped.
/// Throws ValidationError if the file yields no words.
WordSet load_word_list(const std::filesystem::path &path);

struct LexicalRatios {
    double ind = 0, def = 0, fsp = 0, fpp = 0, spp = 0, tsp = 0, tpp = 0, subj = 0, bias = 0;
};

/// Each ratio = hits / max(1, |tokens|).
LexicalRatios lexical_ratios(std::span<const std::string> tokens, const LexiconSet &lexicons);
/// #positive - #negative.
double polarity(std::span<const std::string> tokens, const LexiconSet &lexicons);

struct AnnotatedPetition {
    std::string petition_id;
    std::vector<std::string> tokens;
    std::vector<std::string> pos_tags;
    /// Half-open [start, end) token ranges.
    std::vector<std::pair<std::size_t, std::size_t>> entity_spans;

    /// Tag/token alignment, span bounds and non-overlap.
    void validate() const;
};

struct SyntacticCounts {
    double nnc = 0, vbc = 0, adc = 0, rbc = 0, nec = 0;
};

SyntacticCounts syntactic_counts(const AnnotatedPetition &annotation);

/// petition_id -> annotation, from JSON lines.
std::unordered_map<std::string, AnnotatedPetition> load_annotations(const std::filesystem::path &path);

struct ExternalScores {
    double act = 0.0;
    double csc = 0.0;
    double pbias = 0.0;
    double l_r = 0.0;

    void validate() const;
};

/// petition_id -> scores; absent fields default to 0.
std::unordered_map<std::string, ExternalScores> load_external_scores(const std::filesystem::path &path);

struct DatedVector {
    const text::SparseVector *vector = nullptr;
    corpus::Date date{};
};

/// Whole weeks between dates, floored, never negative.
std::int64_t weeks_between(corpus::Date earlier, corpus::Date later);

/// sum_j cos(v, v_j) / (1 + weeks(j, target)). Throws ValidationError if a
/// history item is dated after the target.
double freshness(const text::SparseVector &target, corpus::Date target_date, std::span<const DatedVector> history);

/// Freshness of every document against all strictly earlier documents,
/// via an inverted index. Agrees with `freshness` up to rounding.
std::vector<double> freshness_all(std::span<const text::SparseVector> vectors, std::span<const corpus::Date> dates);

struct AssembleOptions {
    /// False for corpora without an additional-details field: Add is 0.
    bool details_applicable = true;
};

/// Builds the full vector for one petition. `annotation` may be null
/// (zero syntactic counts); its id must match the petition's otherwise.
FeatureVector assemble(const corpus::Petition &petition, const AnnotatedPetition *annotation,
                       const LexiconSet &lexicons, const text::SparseVector &target_vector,
                       std::span<const DatedVector> history, const ExternalScores &external,
                       const AssembleOptions &options = {});

/// Same as `assemble` with the freshness value already computed.
FeatureVector assemble_with_freshness(const corpus::Petition &petition, const AnnotatedPetition *annotation,
                                      const LexiconSet &lexicons, double fre, const ExternalScores &external,
                                      const AssembleOptions &options = {});

class Standardizer {
public:
    /// Population mean/std per column; std floored at 1e-8.
    void fit(std::span<const std::vector<double>> rows);
    [[nodiscard]] std::vector<double> apply(std::span<const double> row) const;
    [[nodiscard]] bool fitted() const noexcept { return !mean_.empty(); }
    [[nodiscard]] const std::vector<double> &mean() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<double> &stddev() const noexcept { return std_; }
    static Standardizer from_moments(std::vector<double> mean, std::vector<double> stddev);

private:
    std::vector<double> mean_;
    std::vector<double> std_;
};

}  // namespace petition::features
