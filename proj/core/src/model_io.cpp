#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "aicatcher/errors.hpp"
#include "aicatcher/model.hpp"

namespace aicatcher {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'I', 'C', 'R'};
constexpr std::size_t kPreambleSize = 4 + 2 + 4;
constexpr std::size_t kChecksumSize = 4;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large inputs in chunks.
    constexpr std::size_t kChunk = 1u << 30;
    for (std::size_t at = 0; at < bytes.size(); at += kChunk) {
        const auto n = std::min(kChunk, bytes.size() - at);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + at), static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

json layer_manifest(const ModelConfig& c) {
    json layers = json::array();
    layers.push_back({{"kind", "Embedding"}, {"branch", "cnn"}, {"vocab", c.vocab_size}, {"dim", c.embedding_dim}});
    layers.push_back({{"kind", "SpatialDropout1D"}, {"branch", "cnn"}, {"rate", c.dropout_rate}});
    layers.push_back({{"kind", "Conv1D"},
                      {"branch", "cnn"},
                      {"in_channels", c.embedding_dim},
                      {"filters", c.conv_filters},
                      {"kernel", c.conv_kernel},
                      {"activation", "ReLU"}});
    layers.push_back({{"kind", "GlobalMaxPool1D"}, {"branch", "cnn"}});
    std::size_t in = FeatureVector::kSize;
    for (auto w : c.mlp_hidden) {
        layers.push_back({{"kind", "Dense"}, {"branch", "mlp"}, {"in", in}, {"out", w}, {"activation", "ReLU"}});
        in = w;
    }
    layers.push_back({{"kind", "Concat"}, {"order", {"cnn", "mlp"}}, {"width", c.conv_filters + in}});
    in += c.conv_filters;
    for (auto w : c.fusion_hidden) {
        layers.push_back({{"kind", "Dense"}, {"branch", "fusion"}, {"in", in}, {"out", w}, {"activation", "ReLU"}});
        in = w;
    }
    layers.push_back({{"kind", "Dense"}, {"branch", "output"}, {"in", in}, {"out", 1}, {"activation", "Sigmoid"}});
    return layers;
}

[[noreturn]] void corrupt(const std::string& what) { throw CorruptModelFile("corrupt model file: " + what); }

}  // namespace

std::string serialize_model(const DetectorModel& model) {
    json tensors = json::array();
    for (const auto& p : model.parameters()) tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}});
    const auto& meta = model.training_meta();
    const json header{{"format", "aicatcher-model"},
                      {"config", model.config().to_json()},
                      {"vocabulary", model.vocabulary().to_json()},
                      {"scaler", model.scaler().to_json()},
                      {"training_meta",
                       {{"epochs_run", meta.epochs_run}, {"final_train_loss", meta.final_train_loss}, {"seed", meta.seed}}},
                      {"layers", layer_manifest(model.config())},
                      {"tensors", tensors}};
    const auto header_text = header.dump();

    std::string out(kMagic, sizeof kMagic);
    put_u16(out, kModelFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    out.reserve(out.size() + 4 * model.parameter_count() + kChecksumSize);
    for (const auto& p : model.parameters()) {
        for (const double v : p.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    put_u32(out, crc32_of(out));
    return out;
}

DetectorModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < 6) corrupt("truncated before the version field");
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt("bad magic bytes");
    const auto version = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[4]) |
                                                    (static_cast<unsigned char>(bytes[5]) << 8));
    if (version != kModelFormatVersion) {
        throw VersionMismatch("model format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kModelFormatVersion) + ")");
    }
    if (bytes.size() < kPreambleSize + kChecksumSize) corrupt("truncated, checksum missing");
    const auto body = bytes.substr(0, bytes.size() - kChecksumSize);
    const auto stored = get_u32(bytes, bytes.size() - kChecksumSize);
    if (crc32_of(body) != stored) corrupt("checksum mismatch");

    const auto header_len = get_u32(bytes, 6);
    if (header_len > body.size() - kPreambleSize) corrupt("header length exceeds file size");
    json header;
    try {
        header = json::parse(body.substr(kPreambleSize, header_len));
        if (header.at("format") != "aicatcher-model") corrupt("unexpected format tag");
        auto config = ModelConfig::from_json(header.at("config"));
        auto vocab = Vocabulary::from_json(header.at("vocabulary"));
        auto scaler = FeatureScaler::from_json(header.at("scaler"));
        auto model = DetectorModel::build(config, std::move(vocab), std::move(scaler));
        const auto& jm = header.at("training_meta");
        model.set_training_meta({jm.at("epochs_run").get<std::size_t>(), jm.at("final_train_loss").get<double>(),
                                 jm.at("seed").get<std::uint64_t>()});

        const auto& manifest = header.at("tensors");
        auto params = model.parameters();
        if (manifest.size() != params.size()) corrupt("tensor manifest does not match the architecture");
        std::size_t at = kPreambleSize + header_len;
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i];
            if (manifest[i].at("name") != p.name || manifest[i].at("shape").get<nn::Shape>() != p.value.shape()) {
                corrupt("tensor " + p.name + " does not match the architecture");
            }
            if (body.size() - at < 4 * p.value.size()) corrupt("truncated tensor data");
            for (auto& v : p.value.data()) {
                v = static_cast<double>(std::bit_cast<float>(get_u32(body, at)));
                at += 4;
            }
        }
        if (at != body.size()) corrupt("trailing bytes after tensor data");
        return model;
    } catch (const json::exception& e) {
        corrupt(std::string("unreadable header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        corrupt(std::string("invalid header: ") + e.what());
    }
}

void save_model(const DetectorModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOFailure("failed writing " + path.string());
}

DetectorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOFailure("cannot open model file " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::string model_fingerprint(const DetectorModel& model) {
    static constexpr char kHex[] = "0123456789abcdef";
    const auto crc = crc32_of(serialize_model(model));
    std::string out(8, '0');
    for (int i = 0; i < 8; ++i) out[7 - i] = kHex[(crc >> (4 * i)) & 0xF];
    return out;
}

}  // namespace aicatcher
