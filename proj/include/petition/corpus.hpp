#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace petition::corpus {

using Date = std::chrono::year_month_day;

/// Parses "YYYY-MM-DD" (an optional "THH:MM:SS..." suffix is ignored).
/// Throws ValidationError on anything that is not a valid calendar date.
Date parse_date(std::string_view text);
std::string format_date(Date date);
/// Whole days from `from` to `to` (negative when `to` is earlier).
std::int64_t days_between(Date from, Date to);

struct Petition {
    std::string id;
    std::string title;
    std::string body;
    std::optional<std::string> additional_details;
    std::int64_t signature_count = 1;
    Date start_date{};

    /// Title, body and additional details joined by single spaces.
    [[nodiscard]] std::string full_text() const;
    [[nodiscard]] bool has_additional_details() const {
        return additional_details.has_value() && !additional_details->empty();
    }
};

struct IngestOptions {
    /// Drop petitions whose count is <= this value (the US corpus only
    /// publishes petitions above 150 signatures).
    std::optional<std::int64_t> drop_at_or_below;
};

struct IngestResult {
    std::vector<Petition> petitions;
    std::size_t dropped = 0;
};

/// Reads one JSON record per line. Blank lines are skipped.
IngestResult load_petitions(const std::filesystem::path &path, const IngestOptions &options = {});
std::vector<Petition> parse_petitions(std::string_view content, const std::string &source = "<memory>",
                                      const IngestOptions &options = {}, std::size_t *dropped = nullptr);

enum class LogBase { Natural, Base10 };

LogBase parse_log_base(std::string_view name);
std::string_view to_string(LogBase base);

/// Regression target for a signature count. Throws DomainError for count < 1.
double log_target(std::int64_t count, LogBase base = LogBase::Natural);
/// Inverse of log_target.
double inverse_log_target(double value, LogBase base = LogBase::Natural);

class OrdinalScheme {
public:
    /// Throws ValidationError unless thresholds are non-empty, positive and
    /// strictly increasing.
    explicit OrdinalScheme(std::vector<std::int64_t> thresholds);

    static OrdinalScheme uk();
    static OrdinalScheme us();

    [[nodiscard]] const std::vector<std::int64_t> &thresholds() const noexcept { return thresholds_; }
    [[nodiscard]] std::size_t size() const noexcept { return thresholds_.size(); }

    bool operator==(const OrdinalScheme &) const = default;

private:
    std::vector<std::int64_t> thresholds_;
};

/// Bit k is 1 iff count >= thresholds[k].
std::vector<std::uint8_t> encode_ordinal(const OrdinalScheme &scheme, std::int64_t count);
/// Number of satisfied thresholds; also the ordinal group index.
std::size_t ordinal_level(const OrdinalScheme &scheme, std::int64_t count);

struct LabeledExample {
    std::string petition_id;
    std::string text;
    double log_count = 0.0;
    std::int64_t signature_count = 1;
    std::vector<std::uint8_t> ordinal_bits;
    Date start_date{};
    /// Position of the source petition in the ingested list.
    std::size_t source_index = 0;
};

LabeledExample make_example(const Petition &petition, const OrdinalScheme &scheme, std::size_t source_index,
                            LogBase base = LogBase::Natural);

struct SplitRatios {
    double train = 0.8;
    double dev = 0.1;
    double test = 0.1;
};

/// Indices into the input petition list, per split, in chronological order.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> dev;
    std::vector<std::size_t> test;
};

struct SplitDataset {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> test;
    SplitRatios ratios;
};

/// Stable sort by start date, then cut at floor(r_train n) and
/// floor((r_train + r_dev) n).
SplitIndices chronological_indices(const std::vector<Petition> &petitions, const SplitRatios &ratios = {});
SplitDataset chronological_split(const std::vector<Petition> &petitions, const OrdinalScheme &scheme,
                                 const SplitRatios &ratios = {}, LogBase base = LogBase::Natural);

}  // namespace petition::corpus
