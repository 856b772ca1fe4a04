#include "petition/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "petition/errors.hpp"

namespace petition::nn {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'P', 'C', 'K', 'T'};

template <typename UInt>
void put_le(std::string &out, UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xffU));
}

class Reader {
public:
    Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    template <typename UInt>
    UInt get() {
        need(sizeof(UInt));
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            v |= static_cast<UInt>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(UInt);
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw ValidationError(source_ + ": truncated tensor file");
    }

    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

json config_to_json(const ModelConfig &c) {
    return json{{"vocab_size", c.vocab_size},       {"embed_dim", c.embed_dim},
                {"widths", c.widths},               {"filters_per_width", c.filters_per_width},
                {"feature_dim", c.feature_dim},     {"fusion_dim", c.fusion_dim},
                {"hidden_sizes", c.hidden_sizes},   {"n_thresholds", c.n_thresholds},
                {"elu_alpha", c.elu_alpha}};
}

ModelConfig config_from_json(const json &j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.widths = j.at("widths").get<std::vector<std::size_t>>();
    c.filters_per_width = j.at("filters_per_width").get<std::size_t>();
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.fusion_dim = j.at("fusion_dim").get<std::size_t>();
    c.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    c.n_thresholds = j.at("n_thresholds").get<std::size_t>();
    c.elu_alpha = j.at("elu_alpha").get<double>();
    return c;
}

std::string format_shape(const std::vector<std::size_t> &shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + "]";
}

std::string read_all(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path &dir, const CnnModel &model, const CheckpointMeta &meta) {
    std::filesystem::create_directories(dir);

    json manifest{
        {"format_version", kCheckpointFormatVersion},
        {"variant", meta.variant},
        {"gamma", meta.gamma},
        {"vocab_hash", meta.vocab_hash},
        {"thresholds", meta.thresholds},
        {"scheme", meta.scheme_name},
        {"log_base", std::string(corpus::to_string(meta.log_base))},
        {"max_length", meta.max_length},
        {"model", config_to_json(model.config())},
        {"feature_mean", meta.feature_mean},
        {"feature_std", meta.feature_std},
        {"feature_names", meta.feature_names},
    };
    json tensors = json::array();
    for (const auto &p : model.parameters()) tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}});
    manifest["tensors"] = tensors;

    {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) throw ValidationError("cannot write checkpoint manifest in '" + dir.string() + "'");
        out << manifest.dump(2) << '\n';
    }

    std::string blob(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(blob, kCheckpointFormatVersion);
    put_le<std::uint32_t>(blob, static_cast<std::uint32_t>(model.parameters().size()));
    for (const auto &p : model.parameters()) {
        put_le<std::uint32_t>(blob, static_cast<std::uint32_t>(p.name.size()));
        blob += p.name;
        put_le<std::uint32_t>(blob, static_cast<std::uint32_t>(p.value.rank()));
        for (const auto dim : p.value.shape()) put_le<std::uint64_t>(blob, dim);
        blob.reserve(blob.size() + 8 * p.value.size());
        for (const double x : p.value.data()) put_le<std::uint64_t>(blob, std::bit_cast<std::uint64_t>(x));
    }
    std::ofstream out(dir / "tensors.bin", std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint tensors in '" + dir.string() + "'");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path &dir) {
    const auto manifest_path = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_all(manifest_path));
    } catch (const json::exception &e) {
        throw ValidationError(manifest_path.string() + ": malformed manifest: " + e.what());
    }

    Checkpoint ck;
    try {
        const int version = manifest.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw ValidationError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kCheckpointFormatVersion) + ")");
        }
        ck.meta.variant = manifest.at("variant").get<std::string>();
        ck.meta.gamma = manifest.at("gamma").get<double>();
        ck.meta.vocab_hash = manifest.at("vocab_hash").get<std::uint64_t>();
        ck.meta.thresholds = manifest.at("thresholds").get<std::vector<std::int64_t>>();
        ck.meta.scheme_name = manifest.at("scheme").get<std::string>();
        ck.meta.log_base = corpus::parse_log_base(manifest.at("log_base").get<std::string>());
        ck.meta.max_length = manifest.at("max_length").get<std::size_t>();
        ck.meta.feature_mean = manifest.at("feature_mean").get<std::vector<double>>();
        ck.meta.feature_std = manifest.at("feature_std").get<std::vector<double>>();
        ck.meta.feature_names = manifest.at("feature_names").get<std::vector<std::string>>();
        ck.model = CnnModel(config_from_json(manifest.at("model")));
    } catch (const json::exception &e) {
        throw ValidationError(manifest_path.string() + ": " + e.what());
    }

    const auto tensor_path = dir / "tensors.bin";
    Reader in(read_all(tensor_path), tensor_path.string());
    if (in.bytes(4) != std::string(kMagic, sizeof kMagic)) throw ValidationError(tensor_path.string() + ": bad magic");
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointFormatVersion) {
        throw ValidationError(tensor_path.string() + ": unsupported tensor format version " + std::to_string(version));
    }
    auto params = ck.model.parameters();
    const auto count = in.get<std::uint32_t>();
    if (count != params.size()) {
        throw ValidationError(tensor_path.string() + ": expected " + std::to_string(params.size()) + " tensors, found " +
                              std::to_string(count));
    }
    for (auto &p : params) {
        const std::string name = in.bytes(in.get<std::uint32_t>());
        if (name != p.name) throw ValidationError(tensor_path.string() + ": expected tensor '" + p.name + "', found '" + name + "'");
        std::vector<std::size_t> shape(in.get<std::uint32_t>());
        for (auto &dim : shape) dim = static_cast<std::size_t>(in.get<std::uint64_t>());
        if (shape != p.value.shape()) {
            throw ValidationError(tensor_path.string() + ": shape mismatch for '" + name + "': file " +
                                  format_shape(shape) + ", model " + p.value.shape_string());
        }
        for (double &x : p.value.data()) x = std::bit_cast<double>(in.get<std::uint64_t>());
    }
    if (!in.done()) throw ValidationError(tensor_path.string() + ": trailing bytes after last tensor");
    return ck;
}

}  // namespace petition::nn
