#include <benchmark/benchmark.h>

#include "aicatcher/lingfeat.hpp"
#include "aicatcher/model.hpp"
#include "synthetic_corpus.hpp"

using namespace aicatcher;

namespace {

const std::vector<Document>& corpus() {
    static const auto docs = testing::synthetic_corpus({.per_class = 32});
    return docs;
}

DetectorModel default_model(const Preprocessor& prep) {
    std::vector<std::vector<std::string>> tokens;
    std::vector<FeatureVector> feats;
    for (const auto& d : corpus()) {
        auto p = prep.prepare(d.text);
        tokens.push_back(std::move(p.tokens));
        feats.push_back(p.features);
    }
    return DetectorModel::build(ModelConfig{}, Vocabulary::build(tokens, 10000), FeatureScaler::fit(feats));
}

void BM_Tokenize(benchmark::State& state) {
    const auto& text = corpus()[0].text;
    for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_ExtractFeatures(benchmark::State& state) {
    const FeatureExtractor fx;
    const auto& text = corpus()[1].text;
    for (auto _ : state) benchmark::DoNotOptimize(fx.extract(text));
}
BENCHMARK(BM_ExtractFeatures);

void BM_Forward(benchmark::State& state) {
    const Preprocessor prep;
    const auto model = default_model(prep);
    const auto sample = make_sample(prep.prepare(corpus()[0].text), model, Label::Human);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(sample.sequence, sample.features));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

void BM_Predict(benchmark::State& state) {
    const Preprocessor prep;
    const auto model = default_model(prep);
    const auto& text = corpus()[2].text;
    for (auto _ : state) benchmark::DoNotOptimize(predict(model, prep, text));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
    const Preprocessor prep;
    auto model = default_model(prep);
    std::vector<TrainingSample> batch;
    for (std::size_t i = 0; i < 32; ++i) {
        batch.push_back(make_sample(prep.prepare(corpus()[i].text), model, corpus()[i].label));
    }
    for (auto _ : state) benchmark::DoNotOptimize(model.loss_and_gradient(batch, nn::Mode::Train, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
