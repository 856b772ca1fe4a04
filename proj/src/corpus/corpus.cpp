#include "petition/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "petition/errors.hpp"

namespace petition::corpus {

namespace {

int parse_fixed_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("invalid date '" + std::string(whole) + "'");
    }
    return value;
}

std::string require_string(const nlohmann::json &record, const char *field, const std::string &source,
                           std::size_t line) {
    const auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        throw ParseError(source, line, std::string("missing or non-string field '") + field + "'");
    }
    return it->get<std::string>();
}

}  // namespace

Date parse_date(std::string_view text) {
    const std::string_view day_part = text.substr(0, std::min<std::size_t>(text.size(), 10));
    if (day_part.size() != 10 || day_part[4] != '-' || day_part[7] != '-' ||
        (text.size() > 10 && text[10] != 'T' && text[10] != ' ')) {
        throw ValidationError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const Date date{std::chrono::year{parse_fixed_int(day_part.substr(0, 4), text)},
                    std::chrono::month{static_cast<unsigned>(parse_fixed_int(day_part.substr(5, 2), text))},
                    std::chrono::day{static_cast<unsigned>(parse_fixed_int(day_part.substr(8, 2), text))}};
    if (!date.ok()) throw ValidationError("invalid calendar date '" + std::string(text) + "'");
    return date;
}

std::string format_date(Date date) {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buffer;
}

std::int64_t days_between(Date from, Date to) {
    return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

std::string Petition::full_text() const {
    std::string text = title;
    if (!body.empty()) text += " " + body;
    if (has_additional_details()) text += " " + *additional_details;
    return text;
}

std::vector<Petition> parse_petitions(std::string_view content, const std::string &source,
                                      const IngestOptions &options, std::size_t *dropped) {
    std::vector<Petition> out;
    std::size_t n_dropped = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!record.is_object()) throw ParseError(source, line_no, "record is not a JSON object");

        Petition p;
        p.id = require_string(record, "id", source, line_no);
        p.title = require_string(record, "title", source, line_no);
        if (p.title.empty()) throw ParseError(source, line_no, "empty title");
        p.body = require_string(record, "body", source, line_no);
        if (const auto it = record.find("additional_details"); it != record.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError(source, line_no, "additional_details must be a string");
            p.additional_details = it->get<std::string>();
        }

        const auto count_it = record.find("signature_count");
        if (count_it == record.end() || !count_it->is_number()) {
            throw ParseError(source, line_no, "missing or non-numeric field 'signature_count'");
        }
        if (count_it->is_number_integer()) {
            p.signature_count = count_it->get<std::int64_t>();
        } else {
            const double value = count_it->get<double>();
            if (value != std::floor(value)) throw ParseError(source, line_no, "signature_count must be an integer");
            p.signature_count = static_cast<std::int64_t>(value);
        }
        if (p.signature_count < 1) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": signature_count must be >= 1, got " +
                                  std::to_string(p.signature_count));
        }

        const std::string date_text = require_string(record, "start_date", source, line_no);
        try {
            p.start_date = parse_date(date_text);
        } catch (const ValidationError &e) {
            throw ParseError(source, line_no, e.what());
        }

        if (options.drop_at_or_below && p.signature_count <= *options.drop_at_or_below) {
            ++n_dropped;
            continue;
        }
        out.push_back(std::move(p));
    }
    if (dropped != nullptr) *dropped = n_dropped;
    return out;
}

IngestResult load_petitions(const std::filesystem::path &path, const IngestOptions &options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open petition file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    IngestResult result;
    result.petitions = parse_petitions(buffer.str(), path.string(), options, &result.dropped);
    return result;
}

LogBase parse_log_base(std::string_view name) {
    if (name == "e" || name == "natural" || name == "ln") return LogBase::Natural;
    if (name == "10" || name == "log10") return LogBase::Base10;
    throw ValidationError("unknown log base '" + std::string(name) + "' (expected 'e' or '10')");
}

std::string_view to_string(LogBase base) { return base == LogBase::Natural ? "e" : "10"; }

double log_target(std::int64_t count, LogBase base) {
    if (count < 1) throw DomainError("log_target: count must be >= 1, got " + std::to_string(count));
    const auto c = static_cast<double>(count);
    return base == LogBase::Natural ? std::log(c) : std::log10(c);
}

double inverse_log_target(double value, LogBase base) {
    return base == LogBase::Natural ? std::exp(value) : std::pow(10.0, value);
}

OrdinalScheme::OrdinalScheme(std::vector<std::int64_t> thresholds) : thresholds_(std::move(thresholds)) {
    if (thresholds_.empty()) throw ValidationError("ordinal scheme needs at least one threshold");
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
        if (thresholds_[k] < 1) throw ValidationError("ordinal thresholds must be positive");
        if (k > 0 && thresholds_[k] <= thresholds_[k - 1]) {
            throw ValidationError("ordinal thresholds must be strictly increasing");
        }
    }
}

OrdinalScheme OrdinalScheme::uk() { return OrdinalScheme({10, 100, 1000, 10000, 100000}); }
OrdinalScheme OrdinalScheme::us() { return OrdinalScheme({1000, 10000, 100000}); }

std::vector<std::uint8_t> encode_ordinal(const OrdinalScheme &scheme, std::int64_t count) {
    std::vector<std::uint8_t> bits(scheme.size(), 0);
    for (std::size_t k = 0; k < scheme.size(); ++k) bits[k] = count >= scheme.thresholds()[k] ? 1 : 0;
    return bits;
}

std::size_t ordinal_level(const OrdinalScheme &scheme, std::int64_t count) {
    const auto &t = scheme.thresholds();
    return static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), count) - t.begin());
}

LabeledExample make_example(const Petition &petition, const OrdinalScheme &scheme, std::size_t source_index,
                            LogBase base) {
    LabeledExample ex;
    ex.petition_id = petition.id;
    ex.text = petition.full_text();
    ex.signature_count = petition.signature_count;
    ex.log_count = log_target(petition.signature_count, base);
    ex.ordinal_bits = encode_ordinal(scheme, petition.signature_count);
    ex.start_date = petition.start_date;
    ex.source_index = source_index;
    return ex;
}

SplitIndices chronological_indices(const std::vector<Petition> &petitions, const SplitRatios &ratios) {
    if (petitions.empty()) throw ValidationError("chronological_split: no petitions");
    if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0 ||
        std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
        throw ValidationError("chronological_split: ratios must be positive and sum to 1");
    }
    std::vector<std::size_t> order(petitions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::chrono::sys_days{petitions[a].start_date} < std::chrono::sys_days{petitions[b].start_date};
    });

    const auto n = static_cast<double>(petitions.size());
    // The small epsilon absorbs representation error, e.g. 0.8 * 10950.
    const auto cut1 = static_cast<std::size_t>(std::floor(ratios.train * n + 1e-9));
    const auto cut2 = static_cast<std::size_t>(std::floor((ratios.train + ratios.dev) * n + 1e-9));

    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut1));
    out.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(cut1), order.begin() + static_cast<std::ptrdiff_t>(cut2));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut2), order.end());
    return out;
}

SplitDataset chronological_split(const std::vector<Petition> &petitions, const OrdinalScheme &scheme,
                                 const SplitRatios &ratios, LogBase base) {
    const SplitIndices idx = chronological_indices(petitions, ratios);
    SplitDataset out;
    out.ratios = ratios;
    const auto fill = [&](const std::vector<std::size_t> &from, std::vector<LabeledExample> &to) {
        to.reserve(from.size());
        for (const std::size_t i : from) to.push_back(make_example(petitions[i], scheme, i, base));
    };
    fill(idx.train, out.train);
    fill(idx.dev, out.dev);
    fill(idx.test, out.test);
    return out;
}

}  // namespace petition::corpus
