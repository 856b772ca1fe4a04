#include "petition/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "petition/errors.hpp"
#include "petition/rng.hpp"

namespace petition::text {

namespace {

bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string read_file(const std::filesystem::path &path, const char *what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(std::string("cannot open ") + what + " '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool parse_real(std::string_view field, double &out) {
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc{} && ptr == field.data() + field.size() && std::isfinite(out);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary::Vocabulary() {
    add(std::string(kPadToken));
    add(std::string(kUnknownToken));
}

void Vocabulary::add(std::string token) {
    const auto id = static_cast<std::uint32_t>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::fit(std::span<const std::vector<std::string>> documents, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto &doc : documents) {
        for (const auto &tok : doc) ++counts[tok];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto &[tok, n] : counts) {
        if (n >= min_count && tok != kPadToken && tok != kUnknownToken) kept.emplace_back(tok, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (auto &entry : kept) vocab.add(std::move(entry.first));
    return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path &path) {
    const std::string content = read_file(path, "vocabulary file");
    std::istringstream in(content);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnknownToken) {
        throw FormatError(path.string(), 1, "vocabulary must start with <pad> and <unk>");
    }
    Vocabulary vocab;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (lines[i].empty()) throw FormatError(path.string(), i + 1, "empty token");
        if (vocab.index_.contains(lines[i])) throw FormatError(path.string(), i + 1, "duplicate token");
        vocab.add(lines[i]);
    }
    return vocab;
}

void Vocabulary::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write vocabulary file '" + path.string() + "'");
    for (const auto &tok : tokens_) out << tok << '\n';
}

std::uint32_t Vocabulary::index(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto &tok : tokens_) {
        for (const char c : tok) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= 0xffU;  // token separator
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::uint32_t> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto &tok : tokens) ids.push_back(index(tok));
    return ids;
}

std::vector<std::uint32_t> pad_and_truncate(std::vector<std::uint32_t> ids, std::size_t min_length,
                                            std::size_t max_length) {
    if (ids.size() > max_length) ids.resize(max_length);
    if (ids.size() < min_length) ids.resize(min_length, Vocabulary::kPad);
    return ids;
}

SparseVector::SparseVector(std::size_t dim, std::vector<std::pair<std::uint32_t, double>> entries) : dim_(dim) {
    std::sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    for (const auto &[index, weight] : entries) {
        if (index >= dim) throw ValidationError("sparse index out of range");
        if (!std::isfinite(weight)) throw ValidationError("non-finite sparse weight");
        if (!entries_.empty() && entries_.back().first == index) {
            entries_.back().second += weight;
        } else {
            entries_.emplace_back(index, weight);
        }
    }
}

double SparseVector::squared_norm() const {
    double s = 0.0;
    for (const auto &e : entries_) s += e.second * e.second;
    return s;
}

double SparseVector::norm() const { return std::sqrt(squared_norm()); }

double SparseVector::dot(const SparseVector &other) const {
    double s = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            s += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return s;
}

std::vector<double> SparseVector::to_dense() const {
    std::vector<double> out(dim_, 0.0);
    for (const auto &[i, w] : entries_) out[i] = w;
    return out;
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0) entries.emplace_back(static_cast<std::uint32_t>(i), values[i]);
    }
    return {values.size(), std::move(entries)};
}

SparseVector SparseVector::concat(const SparseVector &a, const SparseVector &b) {
    std::vector<std::pair<std::uint32_t, double>> entries = a.entries_;
    entries.reserve(a.nnz() + b.nnz());
    for (const auto &[i, w] : b.entries_) entries.emplace_back(static_cast<std::uint32_t>(i + a.dim_), w);
    return {a.dim_ + b.dim_, std::move(entries)};
}

double cosine(const SparseVector &u, const SparseVector &v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

void TfidfVectorizer::fit(std::span<const std::vector<std::string>> documents) {
    std::map<std::string, std::size_t> df;
    for (const auto &doc : documents) {
        std::vector<std::string> unique(doc.begin(), doc.end());
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        for (auto &tok : unique) ++df[tok];
    }
    n_documents_ = documents.size();
    terms_.clear();
    idf_.clear();
    index_.clear();
    const auto n = static_cast<double>(n_documents_);
    for (const auto &[term, count] : df) {
        index_.emplace(term, static_cast<std::uint32_t>(terms_.size()));
        terms_.push_back(term);
        idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    fitted_ = true;
}

SparseVector TfidfVectorizer::transform(std::span<const std::string> tokens) const {
    if (!fitted_) throw StateError("TfidfVectorizer::transform called before fit");
    std::unordered_map<std::uint32_t, double> tf;
    for (const auto &tok : tokens) {
        if (const auto it = index_.find(tok); it != index_.end()) tf[it->second] += 1.0;
    }
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(tf.size());
    for (const auto &[i, count] : tf) entries.emplace_back(i, count * idf_[i]);
    std::sort(entries.begin(), entries.end());
    double sq = 0.0;
    for (const auto &e : entries) sq += e.second * e.second;
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto &e : entries) e.second *= inv;
    }
    return {terms_.size(), std::move(entries)};
}

std::optional<double> TfidfVectorizer::idf(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return idf_[it->second];
}

EmbeddingTable random_embeddings(const Vocabulary &vocab, std::size_t dim, std::uint64_t seed) {
    EmbeddingTable table{vocab.size(), dim, std::vector<double>(vocab.size() * dim, 0.0)};
    Rng rng(seed);
    for (std::size_t r = 0; r < table.rows; ++r) {
        // Draw for the pad row too so row r's values do not depend on
        // whether earlier rows were overwritten by file vectors.
        for (double &x : table.row(r)) x = rng.uniform(-0.05, 0.05);
    }
    std::fill_n(table.values.begin(), dim, 0.0);
    return table;
}

namespace {

class EmbeddingReader {
public:
    EmbeddingReader(const Vocabulary &vocab, std::size_t dim, std::uint64_t seed, std::string source)
        : vocab_(vocab), dim_(dim), source_(std::move(source)) {
        if (dim == 0) throw ValidationError("embedding dimension must be positive");
        table_ = random_embeddings(vocab, dim, seed);
        filled_.assign(vocab.size(), false);
        values_.resize(dim);
    }

    void consume(std::string_view line) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto fields = split_whitespace(line);
        if (fields.empty()) return;
        if (line_no_ == 1 && fields.size() == 2) {
            double a = 0;
            double b = 0;
            if (parse_real(fields[0], a) && parse_real(fields[1], b) && b == static_cast<double>(dim_)) return;
        }
        if (fields.size() != dim_ + 1) {
            throw FormatError(source_, line_no_,
                              "expected " + std::to_string(dim_) + " values, got " + std::to_string(fields.size() - 1));
        }
        for (std::size_t k = 0; k < dim_; ++k) {
            if (!parse_real(fields[k + 1], values_[k])) {
                throw FormatError(source_, line_no_, "invalid real '" + std::string(fields[k + 1]) + "'");
            }
        }
        const std::string token(fields[0]);
        if (!vocab_.contains(token)) return;
        const std::uint32_t id = vocab_.index(token);
        if (id == Vocabulary::kPad || filled_[id]) return;
        std::copy(values_.begin(), values_.end(), table_.row(id).begin());
        filled_[id] = true;
        ++stats_.found;
    }

    EmbeddingTable finish(EmbeddingLoadStats *stats) {
        stats_.missing = vocab_.size() - 1 - stats_.found;
        if (stats != nullptr) *stats = stats_;
        return std::move(table_);
    }

private:
    const Vocabulary &vocab_;
    std::size_t dim_;
    std::string source_;
    EmbeddingTable table_;
    std::vector<bool> filled_;
    std::vector<double> values_;
    std::size_t line_no_ = 0;
    EmbeddingLoadStats stats_;
};

}  // namespace

EmbeddingTable parse_embeddings(std::string_view content, const Vocabulary &vocab, std::size_t dim,
                                std::uint64_t seed, const std::string &source, EmbeddingLoadStats *stats) {
    EmbeddingReader reader(vocab, dim, seed, source);
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        reader.consume(content.substr(pos, end - pos));
        pos = end + 1;
    }
    return reader.finish(stats);
}

EmbeddingTable load_embeddings(const std::filesystem::path &path, const Vocabulary &vocab, std::size_t dim,
                               std::uint64_t seed, EmbeddingLoadStats *stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open embedding file '" + path.string() + "'");
    EmbeddingReader reader(vocab, dim, seed, path.string());
    std::string line;
    while (std::getline(in, line)) reader.consume(line);
    return reader.finish(stats);
}

}  // namespace petition::text
