// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aicatcher/corpus.hpp"
#include "aicatcher/errors.hpp"
#include "aicatcher/evalkit.hpp"
#include "aicatcher/lingfeat.hpp"
#include "aicatcher/model.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "synthetic_corpus.hpp"

using namespace aicatcher;
using namespace aicatcher::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    bool skipped = false;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool within(double x, double expected, double tol) { return std::fabs(x - expected) <= tol; }

// 1. Metrics from reference confusion counts, to 5 decimals.
Outcome ac1_reference_counts() {
    const auto start = Clock::now();
    const ConfusionCounts dev1{179, 28, 171, 22};
    const auto m = Metrics::from_counts(dev1);
    const ConfusionCounts dev10{982, 20, 0, 18};
    constexpr double tol = 5e-6;
    bool ok = within(m.accuracy, 0.875, tol) && within(m.precision, 0.864734, tol) &&
              within(m.recall, 0.890547, tol) && within(m.f1, 0.877451, tol);
    ok = ok && within(precision(dev10), 0.98004, tol) && within(recall(dev10), 0.982, tol) &&
         within(f1(dev10), 0.98102, tol);
    const auto human = make_report(dev1).per_class.at(Label::Human);
    ok = ok && within(human.precision, 0.88601, tol) && within(human.recall, 0.8593, tol);
    const double t = seconds_since(start);
    ok = ok && t < 1.0;
    return {ok, "acc " + fmt("%.6f", m.accuracy) + " P " + fmt("%.6f", m.precision) + " R " +
                    fmt("%.6f", m.recall) + " F1 " + fmt("%.6f", m.f1) + "; DEV10 P " +
                    fmt("%.5f", precision(dev10)) + " R " + fmt("%.5f", recall(dev10)) + " F1 " +
                    fmt("%.5f", f1(dev10)) + "; " + fmt("%.3f s", t)};
}

// 2. Formula metrics equal a brute-force tally on 1000 random vectors.
Outcome ac2_random_vectors() {
    Rng rng(20230901);
    double worst = 0.0;
    bool counts_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + rng.below(200);
        std::vector<Label> truth(n);
        std::vector<Label> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.below(2) ? Label::ChatGPT : Label::Human;
            pred[i] = rng.below(2) ? Label::ChatGPT : Label::Human;
        }
        const auto c = tally(truth, pred);
        const auto m = Metrics::from_counts(c);
        const auto b = brute_force(truth, pred);
        counts_ok = counts_ok && c.tp == b.tp && c.fp == b.fp && c.tn == b.tn && c.fn == b.fn;
        for (const auto d : {m.accuracy - b.accuracy, m.precision - b.precision, m.recall - b.recall, m.f1 - b.f1}) {
            worst = std::max(worst, std::fabs(d));
        }
    }
    return {counts_ok && worst <= 1e-12, "1000 vectors, max |diff| " + fmt("%.3g", worst)};
}

// 3. Layer and tiny-model gradient checks over 20 seeds.
Outcome ac3_gradients() {
    const auto start = Clock::now();
    double worst_layer = 0.0;
    double worst_model = 0.0;
    std::string worst_layer_name;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (const auto& g : all_layer_gradchecks(seed)) {
            if (g.max_rel_error > worst_layer) {
                worst_layer = g.max_rel_error;
                worst_layer_name = g.name;
            }
        }
        worst_model = std::max(worst_model, gradcheck_tiny_model(seed).max_rel_error);
    }
    const double t = seconds_since(start);
    const bool ok = worst_layer < 1e-4 && worst_model < 1e-3 && t < 30.0;
    return {ok, "20 seeds; worst layer rel err " + fmt("%.3g", worst_layer) + " (" + worst_layer_name +
                    "), tiny model " + fmt("%.3g", worst_model) + "; " + fmt("%.1f s", t)};
}

// 4. Synthetic corpus, DEV1, default config.
Outcome ac4_synthetic_dev1() {
    const auto start = Clock::now();
    const auto docs = synthetic_corpus();
    const Preprocessor prep;
    const auto corpus = prepare_corpus(filter_binary(docs), prep);
    ExperimentOptions opt;
    opt.seed = 7;
    opt.method = Method::Detector;
    const auto detector = run_experiment(corpus, Setup::DEV1, opt);
    opt.method = Method::LogReg;
    const auto logreg = run_experiment(corpus, Setup::DEV1, opt);
    const double t = seconds_since(start);
    const bool ok = docs.size() == 400 && detector.metrics.accuracy >= 0.95 && logreg.metrics.accuracy >= 0.85 &&
                    t < 180.0;
    return {ok, "detector acc " + fmt("%.4f", detector.metrics.accuracy) + ", LogReg acc " +
                    fmt("%.4f", logreg.metrics.accuracy) + " on " + std::to_string(detector.counts.total()) +
                    " test docs; " + fmt("%.1f s", t)};
}

// 5. Cross-validation split invariants.
Outcome ac5_cv_invariants() {
    Rng rng(55);
    std::size_t plans = 0;
    std::string failure;
    for (const std::size_t n : {10u, 37u, 2000u}) {
        for (const std::size_t k : {5u, 10u}) {
            for (const bool stratified : {true, false}) {
                for (std::uint64_t seed = 0; seed < 5; ++seed) {
                    ++plans;
                    std::vector<Label> labels(n);
                    const double share = rng.uniform(0.2, 0.8);
                    for (auto& l : labels) l = rng.uniform() < share ? Label::ChatGPT : Label::Human;
                    labels[0] = Label::Human;
                    labels[1] = Label::ChatGPT;
                    const auto splits = make_splits(labels, SplitPlan::kfold(k, seed, stratified));
                    const auto tag = "n=" + std::to_string(n) + " k=" + std::to_string(k);
                    if (splits.size() != k) failure = tag + ": fold count";
                    std::vector<int> seen(n, 0);
                    std::size_t lo = n;
                    std::size_t hi = 0;
                    std::size_t n_chat = 0;
                    for (auto l : labels) n_chat += l == Label::ChatGPT;
                    std::vector<EvalReport> fold_reports;
                    ConfusionCounts summed;
                    for (const auto& s : splits) {
                        lo = std::min(lo, s.test.size());
                        hi = std::max(hi, s.test.size());
                        std::set<std::size_t> test(s.test.begin(), s.test.end());
                        std::size_t fold_chat = 0;
                        for (auto i : s.test) {
                            ++seen[i];
                            fold_chat += labels[i] == Label::ChatGPT;
                        }
                        for (auto i : s.train) {
                            if (test.count(i)) failure = tag + ": train/test overlap";
                        }
                        if (s.train.size() + s.test.size() != n) failure = tag + ": split does not cover corpus";
                        if (stratified) {
                            const double expect_chat = static_cast<double>(n_chat) / static_cast<double>(k);
                            const double expect_human = static_cast<double>(n - n_chat) / static_cast<double>(k);
                            if (std::fabs(static_cast<double>(fold_chat) - expect_chat) > 1.0 ||
                                std::fabs(static_cast<double>(s.test.size() - fold_chat) - expect_human) > 1.0) {
                                failure = tag + ": stratification off by more than one";
                            }
                        }
                        std::vector<Label> truth;
                        std::vector<Label> pred;
                        for (auto i : s.test) {
                            truth.push_back(labels[i]);
                            pred.push_back(rng.below(2) ? Label::ChatGPT : Label::Human);
                        }
                        const auto c = tally(truth, pred);
                        summed += c;
                        fold_reports.push_back(make_report(c));
                    }
                    for (auto v : seen) {
                        if (v != 1) failure = tag + ": test folds are not a partition";
                    }
                    if (hi - lo > 1) failure = tag + ": fold sizes differ by more than one";
                    const auto pooled = aggregate(fold_reports, "x", Setup::DEV5);
                    if (!(pooled.counts == summed) || pooled.counts.total() != n) failure = tag + ": pooled counts";
                }
            }
        }
    }
    return {failure.empty(), failure.empty() ? std::to_string(plans) + " plans checked" : failure};
}

// 6. Feature ranges, determinism and POS closure on random Unicode.
Outcome ac6_feature_properties() {
    const FeatureExtractor extractor;
    const Tokenizer tokenizer(Lexicons::builtin().abbreviations);
    const PosTagger tagger(Lexicons::builtin().pos_lexicon, Lexicons::builtin().pronouns);
    Rng rng(6);
    std::string failure;
    std::size_t with_words = 0;
    for (int i = 0; i < 500; ++i) {
        const auto text = random_unicode_text(rng);
        const auto f = extractor.extract(text);
        const auto again = extractor.extract(text);
        if (!(f == again)) failure = "non-deterministic extraction";
        const auto v = f.values();
        for (std::size_t d = 0; d < v.size(); ++d) {
            if (!std::isfinite(v[d]) || v[d] < 0.0) failure = std::string(FeatureVector::kNames[d]) + " out of range";
        }
        for (double r : {f.unique_word_ratio, f.noun_ratio, f.pronoun_ratio, f.verb_ratio, f.adverb_ratio,
                         f.adjective_ratio, f.stopword_ratio, f.sentiment_word_ratio}) {
            if (r > 1.0) failure = "ratio above 1";
        }
        const auto t = tokenizer(text);
        const auto pos = pos_ratios(t, tagger);
        const double sum = pos.noun + pos.pronoun + pos.verb + pos.adverb + pos.adjective + pos.other;
        if (t.word_count() > 0) {
            ++with_words;
            if (std::fabs(sum - 1.0) > 1e-12) failure = "POS ratios do not sum to 1";
        } else if (sum != 0.0) {
            failure = "POS ratios nonzero without words";
        }
    }
    return {failure.empty(),
            failure.empty() ? "500 inputs (" + std::to_string(with_words) + " with words)" : failure};
}

// 7. Save/load round trip and corruption handling.
Outcome ac7_round_trip() {
    SyntheticOptions so;
    so.per_class = 40;
    const auto docs = synthetic_corpus(so);
    const Preprocessor prep;
    const auto corpus = prepare_corpus(docs, prep);
    ModelConfig cfg;
    cfg.epochs = 2;
    cfg.embedding_dim = 16;
    cfg.conv_filters = 16;
    cfg.mlp_hidden = {32, 32};
    cfg.fusion_hidden = {16, 8};
    cfg.max_seq_len = 128;
    cfg.seed = 3;
    std::vector<std::vector<std::string>> tokens;
    std::vector<FeatureVector> feats;
    for (const auto& item : corpus.items) {
        tokens.push_back(item.tokens);
        feats.push_back(item.features);
    }
    auto model = DetectorModel::build(cfg, Vocabulary::build(tokens, cfg.vocab_size), FeatureScaler::fit(feats));
    std::vector<TrainingSample> samples;
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        samples.push_back(make_sample(corpus.items[i], model, corpus.labels[i]));
    }
    train(model, samples);

    TempDir dir;
    const auto path = dir / "model.bin";
    save_model(model, path);
    const auto loaded = load_model(path);
    std::size_t identical = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        const auto text = i < 40 ? docs[i].text : synthetic_paragraph(i % 2 ? Label::ChatGPT : Label::Human, 900 + i);
        const auto a = predict(model, prep, text);
        const auto b = predict(loaded, prep, text);
        identical += std::memcmp(&a.p_chatgpt, &b.p_chatgpt, sizeof(double)) == 0 && a == b;
    }

    const auto bytes = read_file(path);
    auto expect = [&](std::string mutated, auto tag) {
        write_file(dir / "bad.bin", mutated);
        try {
            load_model(dir / "bad.bin");
        } catch (const decltype(tag)&) {
            return true;
        } catch (...) {
        }
        return false;
    };
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x5A;
    std::string bumped = bytes;
    bumped[4] = static_cast<char>(bumped[4] + 1);
    const bool corrupt_ok = expect(flipped, CorruptModelFile("")) &&
                            expect(bytes.substr(0, bytes.size() - 100), CorruptModelFile("")) &&
                            expect(bytes.substr(0, 3), CorruptModelFile(""));
    const bool version_ok = expect(bumped, VersionMismatch(""));
    const bool ok = identical == 50 && corrupt_ok && version_ok && loaded == model;
    return {ok, std::to_string(identical) + "/50 bit-identical; corrupt->CorruptModelFile " +
                    (corrupt_ok ? "yes" : "no") + "; version bump->VersionMismatch " + (version_ok ? "yes" : "no")};
}

// 8. Two CLI evaluate runs emit identical JSON.
Outcome ac8_cli_determinism() {
#ifdef AICATCHER_CLI_PATH
    TempDir dir;
    SyntheticOptions so;
    so.per_class = 50;
    save_jsonl(synthetic_corpus(so), dir / "corpus.jsonl");
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
        const auto report = dir / ("report" + std::to_string(run) + ".json");
        const std::string cmd = std::string("\"") + AICATCHER_CLI_PATH + "\" evaluate --data \"" +
                                (dir / "corpus.jsonl").string() + "\" --setup dev5 --seed 7 --set epochs=5 --out \"" +
                                report.string() + "\" --quiet > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "evaluate exited nonzero"};
        outputs.push_back(read_file(report));
    }
    const bool ok = outputs[0] == outputs[1] && !outputs[0].empty();
    return {ok, std::string("dev5 seed 7, ") + std::to_string(outputs[0].size()) + " bytes, " +
                    (ok ? "identical" : "different")};
#else
    return {false, "command-line tool not built"};
#endif
}

// 9. Optional real corpus, named by AICATCHER_AIGTXT.
Outcome ac9_real_corpus() {
    const char* path = std::getenv("AICATCHER_AIGTXT");
    if (!path || !*path) return {true, "AICATCHER_AIGTXT not set", true};
    const auto docs = filter_binary(load_corpus(path));
    ExperimentOptions opt;
    opt.seed = 7;
    opt.log = [](const std::string& m) { std::cerr << "  " << m << "\n"; };
    const auto report = run_experiment(docs, Setup::DEV1, opt);
    std::cout << render_text(report);
    return {report.metrics.accuracy > 0.55, "DEV1 accuracy " + fmt("%.6f", report.metrics.accuracy)};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"AC1", "metrics from reference confusion counts", ac1_reference_counts},
        {"AC2", "formula metrics equal brute-force tally", ac2_random_vectors},
        {"AC3", "layer and full-model gradient checks", ac3_gradients},
        {"AC4", "synthetic corpus DEV1 accuracy", ac4_synthetic_dev1},
        {"AC5", "cross-validation invariants", ac5_cv_invariants},
        {"AC6", "feature invariants on random Unicode", ac6_feature_properties},
        {"AC7", "model save/load round trip", ac7_round_trip},
        {"AC8", "evaluate runs are reproducible", ac8_cli_determinism},
        {"AC9", "real corpus DEV1 beats majority class", ac9_real_corpus},
    };
    // Optional filter: run only the criteria named on the command line.
    std::set<std::string> only(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const char* status = o.skipped ? "SKIP" : o.pass ? "PASS" : "FAIL";
        std::cout << status << " " << c.id << " " << c.title << " -- " << o.detail << std::endl;
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
