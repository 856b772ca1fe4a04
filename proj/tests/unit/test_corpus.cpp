#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "petition/corpus.hpp"
#include "petition/errors.hpp"
#include "test_support.hpp"

using namespace petition;
using namespace petition::corpus;

namespace {

Petition make(std::string id, std::int64_t count, const std::string &date) {
    Petition p;
    p.id = std::move(id);
    p.title = "t";
    p.body = "b";
    p.signature_count = count;
    p.start_date = parse_date(date);
    return p;
}

}  // namespace

TEST(LoadPetitions, ReadsRecordsInFileOrder) {
    const std::string content =
        R"({"id":"a","title":"Ban X","body":"x","signature_count":5,"start_date":"2016-01-02"})"
        "\n"
        R"({"id":"b","title":"Save Y","body":"y","additional_details":"more","signature_count":12,"start_date":"2016-01-01"})"
        "\n\n"
        R"({"id":"c","title":"Fix Z","body":"z","additional_details":null,"signature_count":1,"start_date":"2016-01-03T10:00:00"})"
        "\n";
    auto ps = parse_petitions(content);
    ASSERT_EQ(ps.size(), 3u);
    EXPECT_EQ(ps[0].id, "a");
    EXPECT_EQ(ps[1].id, "b");
    EXPECT_EQ(ps[2].id, "c");
    EXPECT_FALSE(ps[0].additional_details.has_value());
    EXPECT_EQ(*ps[1].additional_details, "more");
    EXPECT_FALSE(ps[2].additional_details.has_value());
    EXPECT_EQ(format_date(ps[2].start_date), "2016-01-03");
    EXPECT_EQ(ps[1].full_text(), "Save Y y more");
}

TEST(LoadPetitions, ZeroCountIsValidationError) {
    const std::string content = R"({"id":"a","title":"T","body":"x","signature_count":0,"start_date":"2016-01-02"})";
    EXPECT_THROW(parse_petitions(content), ValidationError);
}

TEST(LoadPetitions, MalformedLineNamesLineNumber) {
    const std::string content =
        R"({"id":"a","title":"T","body":"x","signature_count":3,"start_date":"2016-01-02"})"
        "\n{not json\n";
    try {
        parse_petitions(content, "mem");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(LoadPetitions, RejectsMissingFieldsAndBadDates) {
    EXPECT_THROW(parse_petitions(R"({"id":"a","body":"x","signature_count":3,"start_date":"2016-01-02"})"), ParseError);
    EXPECT_THROW(parse_petitions(R"({"id":"a","title":"","body":"x","signature_count":3,"start_date":"2016-01-02"})"),
                 ParseError);
    EXPECT_THROW(parse_petitions(R"({"id":"a","title":"T","body":"x","signature_count":3,"start_date":"2016-02-30"})"),
                 ParseError);
}

TEST(LoadPetitions, DropFilterCountsDropped) {
    std::string content;
    for (int c : {100, 150, 151, 5000}) {
        content += R"({"id":"x)" + std::to_string(c) + R"(","title":"T","body":"b","signature_count":)" +
                   std::to_string(c) + R"(,"start_date":"2016-01-02"})" + "\n";
    }
    IngestOptions opt;
    opt.drop_at_or_below = 150;
    std::size_t dropped = 0;
    const auto ps = parse_petitions(content, "mem", opt, &dropped);
    EXPECT_EQ(ps.size(), 2u);
    EXPECT_EQ(dropped, 2u);
}

TEST(LoadPetitions, FileRoundTrip) {
    fixtures::TempDir dir("corpus");
    std::vector<Petition> ps{make("a", 3, "2016-01-01"), make("b", 30, "2016-01-05")};
    fixtures::write_file(dir / "p.jsonl", fixtures::to_jsonl(ps));
    const auto r = load_petitions(dir / "p.jsonl");
    ASSERT_EQ(r.petitions.size(), 2u);
    EXPECT_EQ(r.petitions[1].signature_count, 30);
    EXPECT_THROW(load_petitions(dir / "missing.jsonl"), ValidationError);
}

TEST(LogTarget, Examples) {
    EXPECT_EQ(log_target(1), 0.0);
    // Reference values from 30-digit arithmetic.
    EXPECT_NEAR(log_target(10000), 9.21034037197618273607, 1e-12);
    EXPECT_NEAR(log_target(150), 5.01063529409625575001, 1e-12);
    EXPECT_NEAR(log_target(10000), 9.21034, 5e-6);
    EXPECT_NEAR(log_target(150), 5.01064, 5e-6);
    EXPECT_THROW(log_target(0), DomainError);
    EXPECT_THROW(log_target(-3), DomainError);
    EXPECT_NEAR(log_target(1000, LogBase::Base10), 3.0, 1e-15);
}

TEST(LogTarget, ExpReconstructsCount) {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::int64_t> dist(1, 10'000'000);
    for (int i = 0; i < 10000; ++i) {
        const auto c = dist(gen);
        EXPECT_NEAR(std::exp(log_target(c)) / static_cast<double>(c), 1.0, 1e-12);
        EXPECT_NEAR(inverse_log_target(log_target(c, LogBase::Base10), LogBase::Base10) / static_cast<double>(c), 1.0,
                    1e-12);
    }
}

TEST(OrdinalScheme, Validation) {
    EXPECT_THROW(OrdinalScheme({}), ValidationError);
    EXPECT_THROW(OrdinalScheme({10, 10}), ValidationError);
    EXPECT_THROW(OrdinalScheme({0, 10}), ValidationError);
    EXPECT_EQ(OrdinalScheme::uk().thresholds(), (std::vector<std::int64_t>{10, 100, 1000, 10000, 100000}));
    EXPECT_EQ(OrdinalScheme::us().thresholds(), (std::vector<std::int64_t>{1000, 10000, 100000}));
}

TEST(EncodeOrdinal, Examples) {
    const auto uk = OrdinalScheme::uk();
    EXPECT_EQ(encode_ordinal(uk, 15000), (std::vector<std::uint8_t>{1, 1, 1, 1, 0}));
    EXPECT_EQ(encode_ordinal(uk, 5), (std::vector<std::uint8_t>{0, 0, 0, 0, 0}));
    EXPECT_EQ(encode_ordinal(uk, 10000), (std::vector<std::uint8_t>{1, 1, 1, 1, 0}));
    EXPECT_EQ(encode_ordinal(uk, 9999), (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
    EXPECT_EQ(ordinal_level(uk, 15000), 4u);
    EXPECT_EQ(ordinal_level(uk, 1), 0u);
    EXPECT_EQ(ordinal_level(uk, 100000), 5u);
}

TEST(EncodeOrdinal, MatchesBruteForceAndIsMonotone) {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<std::int64_t> dist(1, 10'000'000);
    for (const auto &scheme : {OrdinalScheme::uk(), OrdinalScheme::us()}) {
        std::vector<std::int64_t> counts;
        for (int i = 0; i < 10000; ++i) counts.push_back(dist(gen));
        std::sort(counts.begin(), counts.end());
        std::size_t last_pop = 0;
        for (const auto c : counts) {
            const auto bits = encode_ordinal(scheme, c);
            ASSERT_EQ(bits.size(), scheme.size());
            std::size_t pop = 0;
            for (std::size_t k = 0; k < bits.size(); ++k) {
                EXPECT_EQ(bits[k], c >= scheme.thresholds()[k] ? 1 : 0);
                if (k > 0) { EXPECT_LE(bits[k], bits[k - 1]); }
                pop += bits[k];
            }
            EXPECT_GE(pop, last_pop);
            EXPECT_EQ(pop, ordinal_level(scheme, c));
            last_pop = pop;
        }
    }
}

TEST(ChronologicalSplit, TenDistinctDates) {
    std::vector<Petition> ps;
    for (int i = 0; i < 10; ++i) ps.push_back(make("p" + std::to_string(i), 10 + i, "2016-01-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1)));
    const auto s = chronological_split(ps, OrdinalScheme::uk());
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.dev.size(), 1u);
    EXPECT_EQ(s.test.size(), 1u);
    EXPECT_EQ(s.test[0].petition_id, "p9");
    EXPECT_DOUBLE_EQ(s.train[0].log_count, std::log(10.0));
}

TEST(ChronologicalSplit, LargeCorpusSize) {
    std::vector<Petition> ps(10950, make("x", 5, "2016-01-01"));
    const auto idx = chronological_indices(ps);
    EXPECT_EQ(idx.train.size(), 8760u);
    EXPECT_EQ(idx.dev.size(), 1095u);
    EXPECT_EQ(idx.test.size(), 1095u);
}

TEST(ChronologicalSplit, TiesKeepInputOrder) {
    std::vector<Petition> ps;
    for (int i = 0; i < 10; ++i) ps.push_back(make("p" + std::to_string(i), 5, i < 7 ? "2016-01-01" : "2016-01-02"));
    // Items 7 and 8 share a date and straddle the 8/9 cut.
    ps[8].start_date = ps[7].start_date;
    const auto idx = chronological_indices(ps);
    EXPECT_EQ(idx.train.back(), 7u);
    EXPECT_EQ(idx.dev.front(), 8u);
}

TEST(ChronologicalSplit, ShuffledInputsStayChronologicalAndExhaustive) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Petition> ps;
        const auto n = 5 + static_cast<int>(gen() % 60);
        for (int i = 0; i < n; ++i) {
            Petition p = make("p" + std::to_string(i), 1 + static_cast<std::int64_t>(gen() % 1000), "2016-01-01");
            p.start_date = std::chrono::sys_days{p.start_date} + std::chrono::days{static_cast<int>(gen() % 30)};
            ps.push_back(p);
        }
        const auto s = chronological_split(ps, OrdinalScheme::uk());
        EXPECT_EQ(s.train.size() + s.dev.size() + s.test.size(), ps.size());
        auto max_date = [](const std::vector<LabeledExample> &v) {
            Date d{};
            for (const auto &e : v) d = std::max(d, e.start_date);
            return d;
        };
        auto min_date = [](const std::vector<LabeledExample> &v) {
            Date d = std::chrono::year{9999} / 1 / 1;
            for (const auto &e : v) d = std::min(d, e.start_date);
            return d;
        };
        if (!s.dev.empty()) { EXPECT_LE(max_date(s.train), min_date(s.dev)); }
        if (!s.test.empty()) { EXPECT_LE(max_date(s.dev.empty() ? s.train : s.dev), min_date(s.test)); }
        std::vector<std::size_t> seen;
        for (const auto *part : {&s.train, &s.dev, &s.test}) {
            for (const auto &e : *part) seen.push_back(e.source_index);
        }
        std::sort(seen.begin(), seen.end());
        for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);
    }
}

TEST(ChronologicalSplit, EmptyInputIsError) {
    EXPECT_THROW(chronological_split({}, OrdinalScheme::uk()), ValidationError);
}

TEST(Dates, DaysBetween) {
    EXPECT_EQ(days_between(parse_date("2016-01-01"), parse_date("2016-03-01")), 60);
    EXPECT_EQ(days_between(parse_date("2016-03-01"), parse_date("2016-01-01")), -60);
    EXPECT_THROW(parse_date("2016/01/01"), ValidationError);
}
