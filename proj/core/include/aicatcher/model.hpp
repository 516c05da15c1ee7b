#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aicatcher/corpus.hpp"
#include "aicatcher/lingfeat.hpp"
#include "aicatcher/nn/adam.hpp"
#include "aicatcher/nn/layers.hpp"
#include "aicatcher/rng.hpp"
#include "aicatcher/textprep.hpp"

namespace aicatcher {

struct ModelConfig {
    std::size_t vocab_size = 10000;
    std::size_t embedding_dim = 64;
    std::size_t conv_filters = 128;
    std::size_t conv_kernel = 2;
    double dropout_rate = 0.2;
    std::vector<std::size_t> mlp_hidden{256, 256, 256, 256, 256};
    std::vector<std::size_t> fusion_hidden{128, 64};
    std::size_t max_seq_len = 512;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    // Stop after this many epochs without a lower training loss; 0 disables.
    std::size_t patience = 0;
    Truncation truncation = Truncation::KeepHead;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys are rejected.
    static ModelConfig from_json(const nlohmann::json& j);

    bool operator==(const ModelConfig&) const = default;
};

struct TrainingMeta {
    std::size_t epochs_run = 0;
    double final_train_loss = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const TrainingMeta&) const = default;
};

struct TrainingSample {
    EncodedSequence sequence;
    FeatureVector features;
    Label label = Label::Human;  // Human or ChatGPT
};

struct Prediction {
    double p_chatgpt = 0.0;
    Label label = Label::Human;
    FeatureVector features;

    bool operator==(const Prediction&) const = default;
};

// p >= 0.5 is ChatGPT.
Label label_for(double p_chatgpt);

// Per-sample intermediate values kept for the backward pass.
struct ForwardTape;

// CNN branch over tokens and MLP branch over the scaled features, fused by
// concatenation (CNN block first) into a dense head with one sigmoid unit.
class DetectorModel {
public:
    // Throws VocabTooLarge if the vocabulary does not fit config.vocab_size,
    // std::invalid_argument for an invalid config.
    static DetectorModel build(const ModelConfig& config, Vocabulary vocab, FeatureScaler scaler);

    const ModelConfig& config() const noexcept { return config_; }
    const Vocabulary& vocabulary() const noexcept { return vocab_; }
    const FeatureScaler& scaler() const noexcept { return scaler_; }
    const TrainingMeta& training_meta() const noexcept { return meta_; }
    void set_training_meta(const TrainingMeta& meta) { meta_ = meta; }

    // Order: embedding, conv, mlp layers, fusion layers, output.
    std::span<nn::Parameter> parameters() noexcept { return params_; }
    std::span<const nn::Parameter> parameters() const noexcept { return params_; }
    nn::Parameter& parameter(std::string_view name);
    const nn::Parameter& parameter(std::string_view name) const;
    std::size_t parameter_count() const noexcept;

    // Width of the concatenated fusion input.
    std::size_t fusion_width() const noexcept;

    // Eval-mode probability. The sequence must have config.max_seq_len
    // entries (ShapeMismatch otherwise).
    double forward(const EncodedSequence& seq, const FeatureVector& features) const;
    double forward(const EncodedSequence& seq, const FeatureVector& features, nn::Mode mode, Rng& dropout_rng) const;
    // Same, on features already passed through the scaler.
    double forward_scaled(const EncodedSequence& seq, std::span<const double> scaled, nn::Mode mode,
                          Rng* dropout_rng) const;

    // Mean BCE over `batch`; parameter gradients are overwritten with the
    // gradient of that mean. Dropout masks come from a generator seeded
    // with `dropout_seed`, so repeated calls see the same masks.
    double loss_and_gradient(std::span<const TrainingSample> batch, nn::Mode mode, std::uint64_t dropout_seed = 0);

    void zero_gradients();

    bool operator==(const DetectorModel& other) const;

private:
    friend struct ModelTrainer;

    DetectorModel() = default;

    double run(const EncodedSequence& seq, std::span<const double> scaled, nn::Mode mode, Rng* dropout_rng,
               ForwardTape* tape) const;
    void backprop(const ForwardTape& tape, double dlogit);

    ModelConfig config_;
    Vocabulary vocab_;
    FeatureScaler scaler_;
    TrainingMeta meta_;
    std::vector<nn::Parameter> params_;
};

// Closed-form parameter count for a config.
std::size_t parameter_count(const ModelConfig& config);

struct TrainingReport {
    std::vector<double> loss_curve;  // mean training loss per epoch
    std::size_t epochs_run = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Mini-batch Adam on BCE. Samples are put in a canonical order before the
// seeded per-epoch shuffle, so the result does not depend on input order.
// Parameters are kept float32-representable after every step.
// Throws SingleClassTrainingSet unless both classes are present.
TrainingReport train(DetectorModel& model, std::span<const TrainingSample> samples,
                     const EpochCallback& on_epoch = nullptr);

// Raw text to model inputs: one tokenization feeds both the feature
// extractor and the lemmatized token stream.
class Preprocessor {
public:
    Preprocessor();
    Preprocessor(std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const GrammarChecker> grammar);

    struct Prepared {
        std::vector<std::string> tokens;  // lowercased, lemmatized words
        FeatureVector features;
    };

    Prepared prepare(std::string_view raw_text) const;

    const FeatureExtractor& extractor() const noexcept { return extractor_; }

private:
    FeatureExtractor extractor_;
    Lemmatizer lemmatizer_;
};

TrainingSample make_sample(const Preprocessor::Prepared& prepared, const DetectorModel& model, Label label);

Prediction predict(const DetectorModel& model, const Preprocessor& prep, std::string_view raw_text);

// Binary model file: "AICR", u16 format version, u32 header length, JSON
// header, float32 little-endian parameter blobs, CRC-32 of everything
// before it. Parameters must be float32-representable to round-trip.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::string serialize_model(const DetectorModel& model);
// Throws VersionMismatch or CorruptModelFile.
DetectorModel deserialize_model(std::string_view bytes);

void save_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_model(const std::filesystem::path& path);

// CRC-32 of the serialized model, as 8 hex digits.
std::string model_fingerprint(const DetectorModel& model);

}  // namespace aicatcher
