#include "aicatcher/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"

namespace aicatcher {

using nlohmann::json;
using nn::Mode;
using nn::Tensor;

// --- config -------------------------------------------------------------------

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (vocab_size < Vocabulary::kReserved + 1) fail("vocab_size must be at least 3");
    if (embedding_dim == 0) fail("embedding_dim must be positive");
    if (conv_filters == 0) fail("conv_filters must be positive");
    if (conv_kernel == 0) fail("conv_kernel must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
    if (mlp_hidden.empty()) fail("mlp_hidden needs at least one layer");
    if (fusion_hidden.size() != 2) fail("fusion_hidden must have exactly two layers");
    for (auto w : mlp_hidden) {
        if (w == 0) fail("mlp_hidden widths must be positive");
    }
    for (auto w : fusion_hidden) {
        if (w == 0) fail("fusion_hidden widths must be positive");
    }
    if (max_seq_len < conv_kernel) fail("max_seq_len must be at least conv_kernel");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be non-negative");
    if (batch_size == 0) fail("batch_size must be positive");
}

json ModelConfig::to_json() const {
    return json{{"vocab_size", vocab_size},
                {"embedding_dim", embedding_dim},
                {"conv_filters", conv_filters},
                {"conv_kernel", conv_kernel},
                {"dropout_rate", dropout_rate},
                {"mlp_hidden", mlp_hidden},
                {"fusion_hidden", fusion_hidden},
                {"max_seq_len", max_seq_len},
                {"learning_rate", learning_rate},
                {"batch_size", batch_size},
                {"epochs", epochs},
                {"seed", seed},
                {"patience", patience},
                {"truncation", truncation == Truncation::KeepHead ? "head" : "tail"}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
    ModelConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "vocab_size") c.vocab_size = value.get<std::size_t>();
        else if (key == "embedding_dim") c.embedding_dim = value.get<std::size_t>();
        else if (key == "conv_filters") c.conv_filters = value.get<std::size_t>();
        else if (key == "conv_kernel") c.conv_kernel = value.get<std::size_t>();
        else if (key == "dropout_rate") c.dropout_rate = value.get<double>();
        else if (key == "mlp_hidden") c.mlp_hidden = value.get<std::vector<std::size_t>>();
        else if (key == "fusion_hidden") c.fusion_hidden = value.get<std::vector<std::size_t>>();
        else if (key == "max_seq_len") c.max_seq_len = value.get<std::size_t>();
        else if (key == "learning_rate") c.learning_rate = value.get<double>();
        else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
        else if (key == "epochs") c.epochs = value.get<std::size_t>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "patience") c.patience = value.get<std::size_t>();
        else if (key == "truncation") {
            const auto s = value.get<std::string>();
            if (s == "head") c.truncation = Truncation::KeepHead;
            else if (s == "tail") c.truncation = Truncation::KeepTail;
            else throw std::invalid_argument("truncation must be head or tail, got " + s);
        } else {
            throw std::invalid_argument("unknown model config key: " + key);
        }
    }
    return c;
}

Label label_for(double p_chatgpt) { return p_chatgpt >= 0.5 ? Label::ChatGPT : Label::Human; }

std::size_t parameter_count(const ModelConfig& c) {
    std::size_t n = c.vocab_size * c.embedding_dim;
    n += c.conv_kernel * c.embedding_dim * c.conv_filters + c.conv_filters;
    std::size_t in = FeatureVector::kSize;
    for (auto w : c.mlp_hidden) {
        n += in * w + w;
        in = w;
    }
    in += c.conv_filters;
    for (auto w : c.fusion_hidden) {
        n += in * w + w;
        in = w;
    }
    return n + in + 1;
}

// --- build --------------------------------------------------------------------

namespace {

enum Stream : std::uint64_t { kInitStream = 0, kShuffleStream = 1, kDropoutStream = 2 };

// Fixed positions in the parameter list.
constexpr std::size_t kEmbedding = 0;
constexpr std::size_t kConvW = 1;
constexpr std::size_t kConvB = 2;
constexpr std::size_t kFirstDense = 3;

double to_target(Label label) {
    switch (label) {
        case Label::ChatGPT: return 1.0;
        case Label::Human: return 0.0;
        case Label::Mixed: break;
    }
    throw std::invalid_argument("training samples must be labeled Human or ChatGPT");
}

}  // namespace

DetectorModel DetectorModel::build(const ModelConfig& config, Vocabulary vocab, FeatureScaler scaler) {
    config.validate();
    if (vocab.size() > config.vocab_size) {
        throw VocabTooLarge("vocabulary of " + std::to_string(vocab.size()) + " entries exceeds vocab_size " +
                            std::to_string(config.vocab_size));
    }
    DetectorModel m;
    m.config_ = config;
    m.vocab_ = std::move(vocab);
    m.scaler_ = std::move(scaler);
    m.meta_.seed = config.seed;

    Rng rng(Rng::derive(config.seed, kInitStream));
    const auto d = config.embedding_dim;
    const auto f = config.conv_filters;
    const auto k = config.conv_kernel;

    Tensor table({config.vocab_size, d});
    nn::uniform_init(table, -0.05, 0.05, rng);
    m.params_.emplace_back("embedding", std::move(table));

    Tensor conv_w({k, d, f});
    nn::glorot_uniform(conv_w, k * d, k * f, rng);
    m.params_.emplace_back("conv.weight", std::move(conv_w));
    m.params_.emplace_back("conv.bias", Tensor({f}));

    auto add_dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        Tensor w({in, out});
        nn::glorot_uniform(w, in, out, rng);
        m.params_.emplace_back(name + ".weight", std::move(w));
        m.params_.emplace_back(name + ".bias", Tensor({out}));
    };
    std::size_t in = FeatureVector::kSize;
    for (std::size_t i = 0; i < config.mlp_hidden.size(); ++i) {
        add_dense("mlp." + std::to_string(i), in, config.mlp_hidden[i]);
        in = config.mlp_hidden[i];
    }
    in += f;
    for (std::size_t i = 0; i < config.fusion_hidden.size(); ++i) {
        add_dense("fusion." + std::to_string(i), in, config.fusion_hidden[i]);
        in = config.fusion_hidden[i];
    }
    add_dense("output", in, 1);

    for (auto& p : m.params_) nn::round_to_float32(p.value);
    return m;
}

nn::Parameter& DetectorModel::parameter(std::string_view name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("no parameter named " + std::string(name));
}

const nn::Parameter& DetectorModel::parameter(std::string_view name) const {
    return const_cast<DetectorModel*>(this)->parameter(name);
}

std::size_t DetectorModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::size_t DetectorModel::fusion_width() const noexcept { return config_.conv_filters + config_.mlp_hidden.back(); }

bool DetectorModel::operator==(const DetectorModel& other) const {
    if (!(config_ == other.config_ && vocab_ == other.vocab_ && scaler_ == other.scaler_ && meta_ == other.meta_)) {
        return false;
    }
    if (params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
    }
    return true;
}

void DetectorModel::zero_gradients() {
    for (auto& p : params_) p.grad.fill(0.0);
}

// --- forward / backward -----------------------------------------------------------

struct ForwardTape {
    std::vector<std::int32_t> indices;  // PAD tail trimmed
    Tensor conv_in;
    nn::ChannelMask mask;
    bool masked = false;
    Tensor conv_pre;
    nn::MaxPoolResult pool;
    std::vector<Tensor> dense_in;   // inputs of mlp, fusion and output layers, in order
    std::vector<Tensor> dense_pre;  // their pre-activations
    double p = 0.0;
};

namespace {

// Windows lying wholly in the PAD tail all produce the same conv output, so
// keeping the first of them leaves the max pool (and its lowest-index
// argmax) unchanged.
std::size_t effective_length(std::span<const std::int32_t> indices, std::size_t kernel) {
    std::size_t last = indices.size();
    while (last > 0 && indices[last - 1] == Vocabulary::kPad) --last;
    return std::min(indices.size(), last + kernel);
}

}  // namespace

double DetectorModel::run(const EncodedSequence& seq, std::span<const double> scaled, Mode mode, Rng* dropout_rng,
                          ForwardTape* tape) const {
    if (seq.indices.size() != config_.max_seq_len) {
        throw ShapeMismatch("sequence length " + std::to_string(seq.indices.size()) + " != max_seq_len " +
                            std::to_string(config_.max_seq_len));
    }
    if (scaled.size() != FeatureVector::kSize) throw ShapeMismatch("expected 13 features");

    const std::span<const std::int32_t> all(seq.indices);
    const auto indices = all.first(effective_length(all, config_.conv_kernel));

    Tensor x = nn::embedding_forward(indices, params_[kEmbedding].value);
    nn::ChannelMask mask;
    const bool masked = mode == Mode::Train && config_.dropout_rate > 0.0;
    if (masked) {
        if (!dropout_rng) throw std::invalid_argument("training-mode forward needs a dropout generator");
        mask = nn::draw_channel_mask(1, config_.embedding_dim, config_.dropout_rate, *dropout_rng);
        x = nn::apply_channel_mask(x, mask);
    }
    Tensor conv_pre = nn::conv1d_forward(x, params_[kConvW].value, params_[kConvB].value);
    auto pool = nn::global_max_pool_forward(nn::relu(conv_pre));

    std::vector<Tensor> dense_in;
    std::vector<Tensor> dense_pre;
    auto dense = [&](std::size_t layer, Tensor in) {
        const auto& w = params_[kFirstDense + 2 * layer].value;
        const auto& b = params_[kFirstDense + 2 * layer + 1].value;
        Tensor pre = nn::dense_forward(in, w, b);
        if (tape) {
            dense_in.push_back(std::move(in));
            dense_pre.push_back(pre);
        }
        return pre;
    };

    const auto n_mlp = config_.mlp_hidden.size();
    const auto n_fusion = config_.fusion_hidden.size();
    Tensor h({FeatureVector::kSize}, std::vector<double>(scaled.begin(), scaled.end()));
    for (std::size_t i = 0; i < n_mlp; ++i) h = nn::relu(dense(i, std::move(h)));
    h = nn::concat(pool.values, h);
    for (std::size_t i = 0; i < n_fusion; ++i) h = nn::relu(dense(n_mlp + i, std::move(h)));
    const double logit = dense(n_mlp + n_fusion, std::move(h))[0];
    const double p = nn::sigmoid(logit);

    if (tape) {
        tape->indices.assign(indices.begin(), indices.end());
        tape->conv_in = std::move(x);
        tape->mask = std::move(mask);
        tape->masked = masked;
        tape->conv_pre = std::move(conv_pre);
        tape->pool = std::move(pool);
        tape->dense_in = std::move(dense_in);
        tape->dense_pre = std::move(dense_pre);
        tape->p = p;
    }
    return p;
}

void DetectorModel::backprop(const ForwardTape& tape, double dlogit) {
    const auto n_mlp = config_.mlp_hidden.size();
    const auto n_dense = tape.dense_in.size();

    auto dense_back = [&](std::size_t layer, const Tensor& g) {
        auto& w = params_[kFirstDense + 2 * layer];
        auto& b = params_[kFirstDense + 2 * layer + 1];
        return nn::dense_backward(tape.dense_in[layer], w.value, g, w.grad, b.grad);
    };

    Tensor g({1}, dlogit);
    // Output layer, then the fusion stack (ReLU after each).
    g = dense_back(n_dense - 1, g);
    for (std::size_t layer = n_dense - 1; layer-- > n_mlp;) {
        g = dense_back(layer, nn::relu_backward(tape.dense_pre[layer], g));
    }
    Tensor g_cnn;
    Tensor g_mlp;
    nn::split_grad(g, config_.conv_filters, g_cnn, g_mlp);

    for (std::size_t layer = n_mlp; layer-- > 0;) {
        g_mlp = dense_back(layer, nn::relu_backward(tape.dense_pre[layer], g_mlp));
    }

    Tensor g_conv = nn::global_max_pool_backward(tape.pool, tape.conv_pre.shape(), g_cnn);
    g_conv = nn::relu_backward(tape.conv_pre, g_conv);
    auto& cw = params_[kConvW];
    auto& cb = params_[kConvB];
    Tensor g_x = nn::conv1d_backward(tape.conv_in, cw.value, g_conv, cw.grad, cb.grad);
    if (tape.masked) g_x = nn::spatial_dropout_backward(g_x, tape.mask);
    nn::embedding_backward(tape.indices, g_x, params_[kEmbedding].grad);
}

double DetectorModel::forward(const EncodedSequence& seq, const FeatureVector& features) const {
    const auto scaled = scaler_.apply(features);
    return run(seq, scaled, Mode::Eval, nullptr, nullptr);
}

double DetectorModel::forward(const EncodedSequence& seq, const FeatureVector& features, Mode mode,
                              Rng& dropout_rng) const {
    const auto scaled = scaler_.apply(features);
    return run(seq, scaled, mode, &dropout_rng, nullptr);
}

double DetectorModel::forward_scaled(const EncodedSequence& seq, std::span<const double> scaled, Mode mode,
                                     Rng* dropout_rng) const {
    return run(seq, scaled, mode, dropout_rng, nullptr);
}

double DetectorModel::loss_and_gradient(std::span<const TrainingSample> batch, Mode mode, std::uint64_t dropout_seed) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    zero_gradients();
    Rng rng(dropout_seed);
    const double inv = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardTape tape;
    for (const auto& s : batch) {
        const double y = to_target(s.label);
        const auto scaled = scaler_.apply(s.features);
        const double p = run(s.sequence, scaled, mode, &rng, &tape);
        loss += nn::bce_loss(p, static_cast<int>(y));
        backprop(tape, (p - y) * inv);
    }
    return loss * inv;
}

// --- training -------------------------------------------------------------------

struct ModelTrainer {
    static TrainingReport run(DetectorModel& m, std::span<const TrainingSample> samples, const EpochCallback& cb) {
        const auto& cfg = m.config_;
        bool has_human = false;
        bool has_chatgpt = false;
        for (const auto& s : samples) {
            to_target(s.label);
            (s.label == Label::ChatGPT ? has_chatgpt : has_human) = true;
        }
        if (!has_human || !has_chatgpt) {
            throw SingleClassTrainingSet("training set needs both Human and ChatGPT samples");
        }

        // Scaling is fixed during training, so it is done once.
        std::vector<FeatureScaler::Array> scaled(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) scaled[i] = m.scaler_.apply(samples[i].features);

        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& sa = samples[a];
            const auto& sb = samples[b];
            if (sa.label != sb.label) return sa.label < sb.label;
            const auto va = sa.features.values();
            const auto vb = sb.features.values();
            if (va != vb) return va < vb;
            return sa.sequence.indices < sb.sequence.indices;
        });

        Rng shuffle_rng(Rng::derive(cfg.seed, kShuffleStream));
        Rng dropout_rng(Rng::derive(cfg.seed, kDropoutStream));
        nn::Adam adam(nn::AdamConfig{.learning_rate = cfg.learning_rate});

        TrainingReport report;
        double best = INFINITY;
        std::size_t stale = 0;
        ForwardTape tape;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            shuffle_rng.shuffle(std::span<std::size_t>(order));
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const auto end = std::min(order.size(), start + cfg.batch_size);
                const double inv = 1.0 / static_cast<double>(end - start);
                m.zero_gradients();
                for (std::size_t i = start; i < end; ++i) {
                    const auto& s = samples[order[i]];
                    const double y = to_target(s.label);
                    const double p = m.run(s.sequence, scaled[order[i]], Mode::Train, &dropout_rng, &tape);
                    epoch_loss += nn::bce_loss(p, static_cast<int>(y));
                    m.backprop(tape, (p - y) * inv);
                }
                adam.step(m.params_);
                for (auto& p : m.params_) nn::round_to_float32(p.value);
            }
            const double mean = epoch_loss / static_cast<double>(order.size());
            report.loss_curve.push_back(mean);
            report.epochs_run = epoch + 1;
            if (cb) cb(epoch, mean);
            if (cfg.patience > 0) {
                if (mean < best - 1e-6) {
                    best = mean;
                    stale = 0;
                } else if (++stale >= cfg.patience) {
                    break;
                }
            }
        }
        m.zero_gradients();
        m.meta_.epochs_run = report.epochs_run;
        m.meta_.final_train_loss = report.loss_curve.empty() ? 0.0 : report.loss_curve.back();
        m.meta_.seed = cfg.seed;
        return report;
    }
};

TrainingReport train(DetectorModel& model, std::span<const TrainingSample> samples, const EpochCallback& on_epoch) {
    return ModelTrainer::run(model, samples, on_epoch);
}

// --- inference ------------------------------------------------------------------

namespace {
std::shared_ptr<const Lexicons> builtin_lexicons() {
    return std::shared_ptr<const Lexicons>(&Lexicons::builtin(), [](const Lexicons*) {});
}
}  // namespace

Preprocessor::Preprocessor() : Preprocessor(builtin_lexicons(), GrammarChecker::heuristic()) {}

Preprocessor::Preprocessor(std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const GrammarChecker> grammar)
    : extractor_(lexicons, std::move(grammar)), lemmatizer_(lexicons->lemma_exceptions) {}

Preprocessor::Prepared Preprocessor::prepare(std::string_view raw_text) const {
    const auto lowered = extractor_.tokenizer()(raw_text, CaseMode::Lower);
    Prepared out;
    out.features = extractor_.extract(raw_text, lowered);
    out.tokens = clean(lowered, lemmatizer_);
    return out;
}

TrainingSample make_sample(const Preprocessor::Prepared& prepared, const DetectorModel& model, Label label) {
    const auto& cfg = model.config();
    return {encode_and_pad(prepared.tokens, model.vocabulary(), cfg.max_seq_len, cfg.truncation), prepared.features,
            label};
}

Prediction predict(const DetectorModel& model, const Preprocessor& prep, std::string_view raw_text) {
    const auto prepared = prep.prepare(raw_text);
    const auto sample = make_sample(prepared, model, Label::Human);
    Prediction out;
    out.p_chatgpt = model.forward(sample.sequence, prepared.features);
    out.label = label_for(out.p_chatgpt);
    out.features = prepared.features;
    return out;
}

}  // namespace aicatcher
