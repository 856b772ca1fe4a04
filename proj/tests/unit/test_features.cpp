#include <gtest/gtest.h>

#include <cmath>

#include "petition/errors.hpp"
#include "petition/features.hpp"
#include "petition/rng.hpp"
#include "test_support.hpp"

using namespace petition;
using namespace petition::features;

namespace {

using Tokens = std::vector<std::string>;

LexiconSet full_lexicons() {
    auto lex = LexiconSet::defaults();
    lex.gi_positive = {"good", "great", "fair"};
    lex.gi_negative = {"bad", "unfair"};
    lex.gi_subjective = {"good", "bad", "terrible"};
    lex.bias_words = {"outrageous", "terrible"};
    return lex;
}

corpus::Petition petition_with(const std::string &id, const std::string &title, const std::string &body,
                               std::optional<std::string> details) {
    corpus::Petition p;
    p.id = id;
    p.title = title;
    p.body = body;
    p.additional_details = std::move(details);
    p.signature_count = 10;
    p.start_date = corpus::parse_date("2016-05-01");
    return p;
}

}  // namespace

TEST(LexicalRatios, Examples) {
    const auto lex = LexiconSet::defaults();
    const Tokens t{"we", "want", "the", "change"};
    const auto r = lexical_ratios(t, lex);
    EXPECT_EQ(r.fpp, 0.25);
    EXPECT_EQ(r.def, 0.25);
    EXPECT_EQ(r.ind, 0.0);
    const auto e = lexical_ratios(Tokens{}, lex);
    EXPECT_EQ(e.ind + e.def + e.fsp + e.fpp + e.spp + e.tsp + e.tpp + e.subj + e.bias, 0.0);
    EXPECT_EQ(lexical_ratios(Tokens{"a", "an", "a"}, lex).ind, 1.0);
}

TEST(LexicalRatios, PronounClasses) {
    const auto lex = LexiconSet::defaults();
    const auto r = lexical_ratios(Tokens{"i", "you", "she", "they", "our"}, lex);
    EXPECT_EQ(r.fsp, 0.2);
    EXPECT_EQ(r.spp, 0.2);
    EXPECT_EQ(r.tsp, 0.2);
    EXPECT_EQ(r.tpp, 0.2);
    EXPECT_EQ(r.fpp, 0.2);
}

TEST(LexicalRatios, FuzzCorpusStaysInUnitInterval) {
    const auto lex = full_lexicons();
    const Tokens words{"a", "an", "the", "we", "i", "you", "he", "they", "good", "bad", "terrible", "tax", "road"};
    Rng rng(99);
    for (int d = 0; d < 10000; ++d) {
        Tokens t;
        const auto len = rng.below(30);
        for (std::size_t i = 0; i < len; ++i) t.push_back(words[rng.below(words.size())]);
        const auto r = lexical_ratios(t, lex);
        for (double v : {r.ind, r.def, r.fsp, r.fpp, r.spp, r.tsp, r.tpp, r.subj, r.bias}) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
            ASSERT_FALSE(std::isnan(v));
        }
    }
}

TEST(Polarity, Examples) {
    const auto lex = full_lexicons();
    EXPECT_EQ(polarity(Tokens{"good", "great", "bad", "tax"}, lex), 1.0);
    EXPECT_EQ(polarity(Tokens{"tax", "road"}, lex), 0.0);
    EXPECT_EQ(polarity(Tokens{"good", "good", "bad", "bad"}, lex), 0.0);
}

TEST(SyntacticCounts, Examples) {
    AnnotatedPetition a;
    a.petition_id = "x";
    a.tokens = {"cats", "dog", "runs", "big"};
    a.pos_tags = {"NN", "NNS", "VBZ", "JJ"};
    auto c = syntactic_counts(a);
    EXPECT_EQ(c.nnc, 2.0);
    EXPECT_EQ(c.vbc, 1.0);
    EXPECT_EQ(c.adc, 1.0);
    EXPECT_EQ(c.rbc, 0.0);
    a.entity_spans = {{0, 1}, {2, 4}};
    EXPECT_EQ(syntactic_counts(a).nec, 2.0);
    AnnotatedPetition empty;
    const auto z = syntactic_counts(empty);
    EXPECT_EQ(z.nnc + z.vbc + z.adc + z.rbc + z.nec, 0.0);
}

TEST(SyntacticCounts, RejectsMisalignedAnnotations) {
    AnnotatedPetition a;
    a.tokens = {"a", "b"};
    a.pos_tags = {"NN"};
    EXPECT_THROW(syntactic_counts(a), ValidationError);
    a.pos_tags = {"NN", "NN"};
    a.entity_spans = {{0, 2}, {1, 2}};
    EXPECT_THROW(a.validate(), ValidationError);
    a.entity_spans = {{1, 3}};
    EXPECT_THROW(a.validate(), ValidationError);
}

TEST(Freshness, Examples) {
    const text::SparseVector v(3, {{0, 1.0}});
    const text::SparseVector w(3, {{1, 1.0}});
    const auto day0 = corpus::parse_date("2016-01-08");
    const auto week_before = corpus::parse_date("2016-01-01");
    EXPECT_EQ(freshness(v, day0, {}), 0.0);
    const std::vector<DatedVector> same{{&v, week_before}};
    EXPECT_DOUBLE_EQ(freshness(v, day0, same), 0.5);
    const std::vector<DatedVector> orth{{&w, week_before}};
    EXPECT_EQ(freshness(v, day0, orth), 0.0);
    const std::vector<DatedVector> later{{&v, corpus::parse_date("2016-01-09")}};
    EXPECT_THROW(freshness(v, day0, later), ValidationError);
}

TEST(Freshness, WeekFlooringAndMonotoneDecay) {
    EXPECT_EQ(weeks_between(corpus::parse_date("2016-01-01"), corpus::parse_date("2016-01-07")), 0);
    EXPECT_EQ(weeks_between(corpus::parse_date("2016-01-01"), corpus::parse_date("2016-01-15")), 2);
    const text::SparseVector v(2, {{0, 0.6}, {1, 0.8}});
    const auto target = corpus::parse_date("2017-01-01");
    double prev = INFINITY;
    for (int days = 0; days < 400; days += 3) {
        const std::vector<DatedVector> h{{&v, std::chrono::sys_days{target} - std::chrono::days{days}}};
        const double f = freshness(v, target, h);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, prev);
        prev = f;
    }
}

TEST(Freshness, AllPairsAgreesWithDirectSum) {
    Rng rng(8);
    std::vector<text::SparseVector> vecs;
    std::vector<corpus::Date> dates;
    const auto start = corpus::parse_date("2016-01-01");
    for (int i = 0; i < 60; ++i) {
        std::vector<std::pair<std::uint32_t, double>> e;
        for (int k = 0; k < 4; ++k) e.emplace_back(static_cast<std::uint32_t>(rng.below(15)), rng.uniform());
        vecs.emplace_back(15, e);
        dates.push_back(std::chrono::sys_days{start} + std::chrono::days{static_cast<int>(rng.below(90))});
    }
    const auto all = freshness_all(vecs, dates);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        std::vector<DatedVector> h;
        for (std::size_t j = 0; j < vecs.size(); ++j) {
            if (std::chrono::sys_days{dates[j]} < std::chrono::sys_days{dates[i]}) h.push_back({&vecs[j], dates[j]});
        }
        EXPECT_NEAR(all[i], freshness(vecs[i], dates[i], h), 1e-10);
    }
}

TEST(Assemble, FillsEveryField) {
    const auto lex = full_lexicons();
    const auto p = petition_with("p1", "Stop the terrible tax", "We want a good fair deal", "more info");
    AnnotatedPetition a;
    a.petition_id = "p1";
    a.tokens = {"stop", "tax"};
    a.pos_tags = {"VB", "NN"};
    a.entity_spans = {{1, 2}};
    ExternalScores ext{0.7, 3.0, 0.2, -0.5};
    const auto f = assemble_with_freshness(p, &a, lex, 1.25, ext);
    EXPECT_EQ(f[Feature::Add], 1.0);
    EXPECT_EQ(f[Feature::Fre], 1.25);
    EXPECT_EQ(f[Feature::Act], 0.7);
    EXPECT_EQ(f[Feature::Csc], 3.0);
    EXPECT_EQ(f[Feature::Pbias], 0.2);
    EXPECT_EQ(f[Feature::LR], -0.5);
    EXPECT_EQ(f[Feature::NNC], 1.0);
    EXPECT_EQ(f[Feature::VBC], 1.0);
    EXPECT_EQ(f[Feature::NEC], 1.0);
    EXPECT_EQ(f[Feature::Pol], 2.0);
    EXPECT_NEAR(f[Feature::Def], 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(f[Feature::Bias], 1.0 / 12.0, 1e-15);
    EXPECT_EQ(f, assemble_with_freshness(p, &a, lex, 1.25, ext));
}

TEST(Assemble, AddRulesAndDefaults) {
    const auto lex = LexiconSet::defaults();
    const auto with = petition_with("a", "T", "b", "details");
    const auto empty = petition_with("b", "T", "b", "");
    const auto none = petition_with("c", "T", "b", std::nullopt);
    EXPECT_EQ(assemble_with_freshness(with, nullptr, lex, 0, {})[Feature::Add], 1.0);
    EXPECT_EQ(assemble_with_freshness(empty, nullptr, lex, 0, {})[Feature::Add], 0.0);
    EXPECT_EQ(assemble_with_freshness(none, nullptr, lex, 0, {})[Feature::Add], 0.0);
    AssembleOptions us;
    us.details_applicable = false;
    const auto f = assemble_with_freshness(with, nullptr, lex, 0, {}, us);
    EXPECT_EQ(f[Feature::Add], 0.0);
    EXPECT_EQ(f[Feature::Act] + f[Feature::Csc] + f[Feature::Pbias] + f[Feature::LR], 0.0);
}

TEST(Assemble, MismatchedAnnotationIsError) {
    const auto lex = LexiconSet::defaults();
    AnnotatedPetition a;
    a.petition_id = "other";
    EXPECT_THROW(assemble_with_freshness(petition_with("a", "T", "b", {}), &a, lex, 0, {}), ValidationError);
}

TEST(Assemble, ComputesFreshnessFromHistory) {
    const auto lex = LexiconSet::defaults();
    const auto p = petition_with("a", "T", "b", {});
    const text::SparseVector v(2, {{0, 1.0}});
    const std::vector<DatedVector> h{{&v, corpus::parse_date("2016-04-24")}};
    EXPECT_DOUBLE_EQ(assemble(p, nullptr, lex, v, h, {})[Feature::Fre], 0.5);
}

TEST(ExternalScores, RangeValidation) {
    EXPECT_THROW((ExternalScores{1.5, 0, 0, 0}.validate()), ValidationError);
    EXPECT_THROW((ExternalScores{0, 0, 0, 2}.validate()), ValidationError);
    EXPECT_NO_THROW((ExternalScores{1, -4, 1, -1}.validate()));
}

TEST(FeatureFiles, LoadSidecarsAndWordLists) {
    fixtures::TempDir dir("features");
    fixtures::write_file(dir / "w.txt", "# comment\nGood\n\nfair\n");
    const auto words = load_word_list(dir / "w.txt");
    EXPECT_EQ(words, (WordSet{"good", "fair"}));
    fixtures::write_file(dir / "empty.txt", "# nothing\n");
    EXPECT_THROW(load_word_list(dir / "empty.txt"), ValidationError);

    fixtures::write_file(dir / "ann.jsonl",
                        R"({"petition_id":"p1","tokens":["a","b"],"pos_tags":["NN","VB"],"entity_spans":[[0,1]]})"
                        "\n");
    const auto ann = load_annotations(dir / "ann.jsonl");
    ASSERT_EQ(ann.count("p1"), 1u);
    EXPECT_EQ(ann.at("p1").entity_spans.size(), 1u);
    fixtures::write_file(dir / "bad.jsonl", R"({"petition_id":"p1","tokens":["a"],"pos_tags":[]})" "\n");
    EXPECT_THROW(load_annotations(dir / "bad.jsonl"), ValidationError);

    fixtures::write_file(dir / "ext.jsonl", R"({"petition_id":"p1","act":0.5})" "\n");
    const auto ext = load_external_scores(dir / "ext.jsonl");
    EXPECT_EQ(ext.at("p1").act, 0.5);
    EXPECT_EQ(ext.at("p1").l_r, 0.0);
}

TEST(Standardizer, Examples) {
    Standardizer s;
    EXPECT_THROW((void)s.apply(std::vector<double>{1.0}), StateError);
    const std::vector<std::vector<double>> rows{{0.0, 5.0}, {2.0, 5.0}};
    s.fit(rows);
    const auto a = s.apply(rows[0]);
    const auto b = s.apply(rows[1]);
    EXPECT_DOUBLE_EQ(a[0], -1.0);
    EXPECT_DOUBLE_EQ(b[0], 1.0);
    EXPECT_EQ(a[1], 0.0);
    const auto m = s.apply(std::vector<double>{1.0, 5.0});
    EXPECT_EQ(m[0], 0.0);
    EXPECT_EQ(m[1], 0.0);
}

TEST(Standardizer, StandardizedTrainMatrixHasZeroMeanUnitStd) {
    Rng rng(31);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 500; ++i) rows.push_back({rng.uniform(-3, 7), 100 + 20 * rng.normal(), 4.0});
    Standardizer s;
    s.fit(rows);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0, sq = 0;
        for (const auto &r : rows) mean += s.apply(r)[c];
        mean /= rows.size();
        for (const auto &r : rows) sq += std::pow(s.apply(r)[c] - mean, 2);
        EXPECT_LT(std::abs(mean), 1e-10);
        EXPECT_NEAR(std::sqrt(sq / rows.size()), 1.0, 1e-8);
    }
}

TEST(FeatureNames, ParseRoundTrip) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const auto f = parse_feature_name(kFeatureNames[i]);
        ASSERT_TRUE(f.has_value());
        EXPECT_EQ(static_cast<std::size_t>(*f), i);
    }
    EXPECT_FALSE(parse_feature_name("nope").has_value());
}
