#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace petition::text {

/// Lowercases ASCII letters and splits on maximal runs of characters that
/// are not ASCII alphanumerics. Bytes >= 0x80 are kept inside tokens so
/// multi-byte UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr std::uint32_t kPad = 0;
    static constexpr std::uint32_t kUnknown = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnknownToken = "<unk>";

    Vocabulary();

    /// Keeps tokens seen at least `min_count` times. Ordered by descending
    /// frequency, ties broken lexicographically.
    static Vocabulary fit(std::span<const std::vector<std::string>> documents, std::size_t min_count = 2);
    /// One token per line; the first two lines must be the pad/unknown tokens.
    static Vocabulary load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;

    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
    [[nodiscard]] std::uint32_t index(std::string_view token) const;
    [[nodiscard]] bool contains(std::string_view token) const;
    [[nodiscard]] const std::string &token(std::uint32_t index) const { return tokens_.at(index); }
    [[nodiscard]] std::size_t min_count() const noexcept { return min_count_; }
    /// FNV-1a over the token list; recorded in checkpoints.
    [[nodiscard]] std::uint64_t hash() const;

    [[nodiscard]] std::vector<std::uint32_t> encode(std::span<const std::string> tokens) const;

private:
    void add(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::size_t min_count_ = 0;
};

/// Ids truncated to `max_length` and right-padded with the pad id up to
/// `min_length`.
std::vector<std::uint32_t> pad_and_truncate(std::vector<std::uint32_t> ids, std::size_t min_length = 3,
                                            std::size_t max_length = 400);

class SparseVector {
public:
    SparseVector() = default;
    /// Entries are sorted and duplicate indices summed. Throws
    /// ValidationError on non-finite weights or indices >= dim.
    SparseVector(std::size_t dim, std::vector<std::pair<std::uint32_t, double>> entries);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const std::vector<std::pair<std::uint32_t, double>> &entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }
    [[nodiscard]] double norm() const;
    [[nodiscard]] double squared_norm() const;
    [[nodiscard]] double dot(const SparseVector &other) const;
    [[nodiscard]] std::vector<double> to_dense() const;

    static SparseVector from_dense(std::span<const double> values);
    /// [a; b] with b's indices shifted by a.dim().
    static SparseVector concat(const SparseVector &a, const SparseVector &b);

private:
    std::size_t dim_ = 0;
    std::vector<std::pair<std::uint32_t, double>> entries_;
};

/// u.v / (|u| |v|), or 0 when either norm is 0.
double cosine(const SparseVector &u, const SparseVector &v);

class TfidfVectorizer {
public:
    /// Vocabulary is every token of the fitting corpus, sorted.
    void fit(std::span<const std::vector<std::string>> documents);
    /// tf * (ln((1+N)/(1+df)) + 1), then L2-normalised. Unseen tokens are
    /// ignored. Throws StateError before fit.
    [[nodiscard]] SparseVector transform(std::span<const std::string> tokens) const;

    [[nodiscard]] bool fitted() const noexcept { return fitted_; }
    [[nodiscard]] std::size_t dim() const noexcept { return terms_.size(); }
    [[nodiscard]] std::optional<double> idf(std::string_view term) const;
    [[nodiscard]] std::size_t document_count() const noexcept { return n_documents_; }

private:
    bool fitted_ = false;
    std::size_t n_documents_ = 0;
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Row-major |vocab| x dim matrix of word vectors.
struct EmbeddingTable {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
    [[nodiscard]] std::span<double> row(std::size_t r) { return {values.data() + r * dim, dim}; }
};

/// Random table: uniform(-0.05, 0.05) rows, zero pad row.
EmbeddingTable random_embeddings(const Vocabulary &vocab, std::size_t dim, std::uint64_t seed);

struct EmbeddingLoadStats {
    std::size_t found = 0;
    std::size_t missing = 0;
};

/// Text format: token then `dim` reals per line. A leading "count dim"
/// header line is tolerated. In-vocabulary tokens take the file vector
/// (first occurrence wins), others keep the seeded random row.
EmbeddingTable load_embeddings(const std::filesystem::path &path, const Vocabulary &vocab, std::size_t dim,
                               std::uint64_t seed, EmbeddingLoadStats *stats = nullptr);
EmbeddingTable parse_embeddings(std::string_view content, const Vocabulary &vocab, std::size_t dim,
                                std::uint64_t seed, const std::string &source = "<memory>",
                                EmbeddingLoadStats *stats = nullptr);

}  // namespace petition::text
