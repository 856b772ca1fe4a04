#include "petition/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "petition/errors.hpp"

namespace petition::features {

namespace {

std::size_t count_in(std::span<const std::string> tokens, const WordSet &set) {
    if (set.empty()) return 0;
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [&](const std::string &t) { return set.contains(t); }));
}

std::string lowercase(std::string s) {
    for (char &c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path &path, const char *what, Fn &&fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(std::string("cannot open ") + what + " '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            throw ParseError(path.string(), line_no, std::string("malformed JSON: ") + e.what());
        }
        try {
            fn(record, line_no);
        } catch (const nlohmann::json::exception &e) {
            throw ParseError(path.string(), line_no, e.what());
        } catch (const ParseError &) {
            throw;
        } catch (const ValidationError &e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

}  // namespace

std::optional<Feature> parse_feature_name(std::string_view name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (kFeatureNames[i] == name) return static_cast<Feature>(i);
    }
    if (name == "L-R" || name == "LR") return Feature::LR;
    return std::nullopt;
}

LexiconSet LexiconSet::defaults() {
    LexiconSet l;
    l.indefinite_articles = {"a", "an"};
    l.definite_articles = {"the"};
    l.fsp = {"i", "me", "my", "mine", "myself"};
    l.fpp = {"we", "us", "our", "ours", "ourselves"};
    l.spp = {"you", "your", "yours", "yourself", "yourselves"};
    l.tsp = {"he", "she", "him", "her", "his", "hers", "himself", "herself", "it", "its", "itself"};
    l.tpp = {"they", "them", "their", "theirs", "themselves"};
    return l;
}

WordSet load_word_list(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open lexicon '" + path.string() + "'");
    WordSet words;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        words.insert(lowercase(line.substr(first, last - first + 1)));
    }
    if (words.empty()) throw ValidationError("lexicon '" + path.string() + "' is empty");
    return words;
}

LexicalRatios lexical_ratios(std::span<const std::string> tokens, const LexiconSet &lexicons) {
    const double denom = static_cast<double>(std::max<std::size_t>(1, tokens.size()));
    const auto ratio = [&](const WordSet &set) { return static_cast<double>(count_in(tokens, set)) / denom; };
    LexicalRatios r;
    r.ind = ratio(lexicons.indefinite_articles);
    r.def = ratio(lexicons.definite_articles);
    r.fsp = ratio(lexicons.fsp);
    r.fpp = ratio(lexicons.fpp);
    r.spp = ratio(lexicons.spp);
    r.tsp = ratio(lexicons.tsp);
    r.tpp = ratio(lexicons.tpp);
    r.subj = ratio(lexicons.gi_subjective);
    r.bias = ratio(lexicons.bias_words);
    return r;
}

double polarity(std::span<const std::string> tokens, const LexiconSet &lexicons) {
    return static_cast<double>(count_in(tokens, lexicons.gi_positive)) -
           static_cast<double>(count_in(tokens, lexicons.gi_negative));
}

void AnnotatedPetition::validate() const {
    if (pos_tags.size() != tokens.size()) {
        throw ValidationError("annotation '" + petition_id + "': " + std::to_string(tokens.size()) + " tokens but " +
                              std::to_string(pos_tags.size()) + " POS tags");
    }
    auto spans = entity_spans;
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto [s, e] = spans[i];
        if (s >= e || e > tokens.size()) {
            throw ValidationError("annotation '" + petition_id + "': entity span [" + std::to_string(s) + ", " +
                                  std::to_string(e) + ") out of bounds");
        }
        if (i > 0 && s < spans[i - 1].second) {
            throw ValidationError("annotation '" + petition_id + "': overlapping entity spans");
        }
    }
}

SyntacticCounts syntactic_counts(const AnnotatedPetition &annotation) {
    annotation.validate();
    SyntacticCounts c;
    for (const auto &tag : annotation.pos_tags) {
        if (tag.starts_with("NN")) c.nnc += 1;
        else if (tag.starts_with("VB")) c.vbc += 1;
        else if (tag.starts_with("JJ")) c.adc += 1;
        else if (tag.starts_with("RB")) c.rbc += 1;
    }
    c.nec = static_cast<double>(annotation.entity_spans.size());
    return c;
}

std::unordered_map<std::string, AnnotatedPetition> load_annotations(const std::filesystem::path &path) {
    std::unordered_map<std::string, AnnotatedPetition> out;
    for_each_json_line(path, "annotation file", [&](const nlohmann::json &r, std::size_t) {
        AnnotatedPetition a;
        a.petition_id = r.at("petition_id").get<std::string>();
        a.tokens = r.at("tokens").get<std::vector<std::string>>();
        a.pos_tags = r.at("pos_tags").get<std::vector<std::string>>();
        if (const auto it = r.find("entity_spans"); it != r.end()) {
            for (const auto &span : *it) {
                if (!span.is_array() || span.size() != 2) throw ValidationError("entity span must be [start, end]");
                a.entity_spans.emplace_back(span[0].get<std::size_t>(), span[1].get<std::size_t>());
            }
        }
        a.validate();
        const std::string id = a.petition_id;
        out.insert_or_assign(id, std::move(a));
    });
    return out;
}

void ExternalScores::validate() const {
    if (!(act >= 0.0 && act <= 1.0)) throw ValidationError("act score must be in [0, 1]");
    if (!std::isfinite(csc)) throw ValidationError("csc score must be finite");
    if (!(pbias >= 0.0 && pbias <= 1.0)) throw ValidationError("pbias score must be in [0, 1]");
    if (!(l_r >= -1.0 && l_r <= 1.0)) throw ValidationError("l_r score must be in [-1, 1]");
}

std::unordered_map<std::string, ExternalScores> load_external_scores(const std::filesystem::path &path) {
    std::unordered_map<std::string, ExternalScores> out;
    for_each_json_line(path, "external score file", [&](const nlohmann::json &r, std::size_t) {
        ExternalScores s;
        const auto field = [&](const char *name, double &dst) {
            if (const auto it = r.find(name); it != r.end() && !it->is_null()) dst = it->get<double>();
        };
        field("act", s.act);
        field("csc", s.csc);
        field("pbias", s.pbias);
        field("l_r", s.l_r);
        s.validate();
        out.insert_or_assign(r.at("petition_id").get<std::string>(), s);
    });
    return out;
}

std::int64_t weeks_between(corpus::Date earlier, corpus::Date later) {
    const std::int64_t days = corpus::days_between(earlier, later);
    return days <= 0 ? 0 : days / 7;
}

double freshness(const text::SparseVector &target, corpus::Date target_date, std::span<const DatedVector> history) {
    double fre = 0.0;
    for (const auto &item : history) {
        if (corpus::days_between(item.date, target_date) < 0) {
            throw ValidationError("freshness: history petition dated " + corpus::format_date(item.date) +
                                  " is after the target (" + corpus::format_date(target_date) + ")");
        }
        fre += text::cosine(target, *item.vector) / (1.0 + static_cast<double>(weeks_between(item.date, target_date)));
    }
    return fre;
}

std::vector<double> freshness_all(std::span<const text::SparseVector> vectors, std::span<const corpus::Date> dates) {
    if (vectors.size() != dates.size()) throw ValidationError("freshness_all: vectors and dates differ in length");
    const std::size_t n = vectors.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::int64_t> day(n);
    for (std::size_t i = 0; i < n; ++i) day[i] = std::chrono::sys_days{dates[i]}.time_since_epoch().count();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return day[a] < day[b]; });

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = vectors[i].norm();

    std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, double>>> postings;
    std::vector<double> acc(n, 0.0);
    std::vector<char> seen(n, 0);
    std::vector<std::uint32_t> touched;
    std::vector<double> out(n, 0.0);

    std::size_t g = 0;
    while (g < n) {
        std::size_t g_end = g;
        while (g_end < n && day[order[g_end]] == day[order[g]]) ++g_end;
        for (std::size_t k = g; k < g_end; ++k) {
            const std::size_t i = order[k];
            if (norms[i] == 0.0) continue;
            touched.clear();
            for (const auto &[term, w] : vectors[i].entries()) {
                const auto it = postings.find(term);
                if (it == postings.end()) continue;
                for (const auto &[j, wj] : it->second) {
                    if (seen[j] == 0) {
                        seen[j] = 1;
                        touched.push_back(j);
                    }
                    acc[j] += w * wj;
                }
            }
            std::sort(touched.begin(), touched.end());
            double fre = 0.0;
            for (const std::uint32_t j : touched) {
                const auto weeks = (day[i] - day[j]) / 7;
                fre += (acc[j] / (norms[i] * norms[j])) / (1.0 + static_cast<double>(weeks));
                acc[j] = 0.0;
                seen[j] = 0;
            }
            out[i] = fre;
        }
        for (std::size_t k = g; k < g_end; ++k) {
            const std::size_t i = order[k];
            if (norms[i] == 0.0) continue;
            for (const auto &[term, w] : vectors[i].entries()) {
                postings[term].emplace_back(static_cast<std::uint32_t>(i), w);
            }
        }
        g = g_end;
    }
    return out;
}

FeatureVector assemble_with_freshness(const corpus::Petition &petition, const AnnotatedPetition *annotation,
                                      const LexiconSet &lexicons, double fre, const ExternalScores &external,
                                      const AssembleOptions &options) {
    if (annotation != nullptr && annotation->petition_id != petition.id) {
        throw ValidationError("assemble: annotation '" + annotation->petition_id + "' does not belong to petition '" +
                              petition.id + "'");
    }
    external.validate();
    const std::vector<std::string> tokens = text::tokenize(petition.full_text());
    const LexicalRatios r = lexical_ratios(tokens, lexicons);

    FeatureVector f;
    f[Feature::Add] = options.details_applicable && petition.has_additional_details() ? 1.0 : 0.0;
    f[Feature::Ind] = r.ind;
    f[Feature::Def] = r.def;
    f[Feature::Fsp] = r.fsp;
    f[Feature::Fpp] = r.fpp;
    f[Feature::Spp] = r.spp;
    f[Feature::Tsp] = r.tsp;
    f[Feature::Tpp] = r.tpp;
    f[Feature::Subj] = r.subj;
    f[Feature::Pol] = polarity(tokens, lexicons);
    f[Feature::Bias] = r.bias;
    if (annotation != nullptr) {
        const SyntacticCounts s = syntactic_counts(*annotation);
        f[Feature::NNC] = s.nnc;
        f[Feature::VBC] = s.vbc;
        f[Feature::ADC] = s.adc;
        f[Feature::RBC] = s.rbc;
        f[Feature::NEC] = s.nec;
    }
    f[Feature::Fre] = fre;
    f[Feature::Act] = external.act;
    f[Feature::Csc] = external.csc;
    f[Feature::Pbias] = external.pbias;
    f[Feature::LR] = external.l_r;
    return f;
}

FeatureVector assemble(const corpus::Petition &petition, const AnnotatedPetition *annotation,
                       const LexiconSet &lexicons, const text::SparseVector &target_vector,
                       std::span<const DatedVector> history, const ExternalScores &external,
                       const AssembleOptions &options) {
    const double fre = freshness(target_vector, petition.start_date, history);
    return assemble_with_freshness(petition, annotation, lexicons, fre, external, options);
}

void Standardizer::fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw ValidationError("Standardizer::fit: no rows");
    const std::size_t dim = rows.front().size();
    mean_.assign(dim, 0.0);
    std_.assign(dim, 0.0);
    for (const auto &row : rows) {
        if (row.size() != dim) throw ValidationError("Standardizer::fit: ragged rows");
        for (std::size_t j = 0; j < dim; ++j) mean_[j] += row[j];
    }
    const auto n = static_cast<double>(rows.size());
    for (double &m : mean_) m /= n;
    for (const auto &row : rows) {
        for (std::size_t j = 0; j < dim; ++j) std_[j] += (row[j] - mean_[j]) * (row[j] - mean_[j]);
    }
    for (double &s : std_) s = std::max(std::sqrt(s / n), 1e-8);
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
    if (!fitted()) throw StateError("Standardizer::apply called before fit");
    if (row.size() != mean_.size()) throw ValidationError("Standardizer::apply: dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_[j]) / std_[j];
    return out;
}

Standardizer Standardizer::from_moments(std::vector<double> mean, std::vector<double> stddev) {
    if (mean.size() != stddev.size() || mean.empty()) throw ValidationError("Standardizer: bad moments");
    Standardizer s;
    s.mean_ = std::move(mean);
    s.std_ = std::move(stddev);
    return s;
}

}  // namespace petition::features
