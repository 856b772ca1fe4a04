#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "petition/corpus.hpp"
#include "petition/model.hpp"

namespace petition::nn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything besides the tensors that inference needs.
struct CheckpointMeta {
    std::string variant;
    double gamma = 0.0;
    std::uint64_t vocab_hash = 0;
    std::vector<std::int64_t> thresholds;
    corpus::LogBase log_base = corpus::LogBase::Natural;
    std::string scheme_name;
    std::size_t max_length = 400;
    /// Hand-feature standardisation fitted on the training split.
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    std::vector<std::string> feature_names;
};

struct Checkpoint {
    CnnModel model;
    CheckpointMeta meta;
};

/// Writes `dir/manifest.json` and `dir/tensors.bin`. The tensor file holds,
/// per parameter: u32 name length, name bytes, u32 rank, u64 dims, then the
/// values as little-endian IEEE-754 doubles. Header: "PCKT", u32 version,
/// u32 tensor count.
void save_checkpoint(const std::filesystem::path &dir, const CnnModel &model, const CheckpointMeta &meta);

/// Rejects unknown format versions and any tensor whose name or shape does
/// not match the manifest's architecture.
Checkpoint load_checkpoint(const std::filesystem::path &dir);

}  // namespace petition::nn
