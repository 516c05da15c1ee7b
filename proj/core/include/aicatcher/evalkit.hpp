#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aicatcher/corpus.hpp"
#include "aicatcher/lingfeat.hpp"
#include "aicatcher/model.hpp"

namespace aicatcher {

// Positive class is ChatGPT unless stated otherwise.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
    // The same predictions seen with the other class as positive.
    ConfusionCounts swapped() const noexcept { return {tn, fn, tp, fp}; }

    bool operator==(const ConfusionCounts&) const = default;
};

// Mixed labels are rejected with std::invalid_argument.
ConfusionCounts tally(std::span<const Label> truth, std::span<const Label> predicted,
                      Label positive = Label::ChatGPT);

// Throws EmptyEvaluation for zero samples.
double accuracy(const ConfusionCounts& c);
// A zero denominator gives 0.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f1(const ConfusionCounts& c);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when the metric's denominator was zero and 0 was reported.
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;

    static Metrics from_counts(const ConfusionCounts& c);
    bool operator==(const Metrics&) const = default;
};

struct ClassReport {
    std::size_t actual = 0;     // documents of this class in the test data
    std::size_t predicted = 0;  // documents predicted as this class
    std::size_t correct = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;

    bool operator==(const ClassReport&) const = default;
};

ClassReport class_report(const ConfusionCounts& positive_view);

enum class Setup { DEV1, DEV5, DEV10 };

std::string_view to_string(Setup setup);
// Accepts dev1/dev5/dev10 in any case; throws std::invalid_argument.
Setup parse_setup(std::string_view text);
// Number of test folds: 1 for DEV1 (80/20 holdout), else k.
std::size_t fold_count(Setup setup);

struct EvalReport {
    static constexpr int kSchemaVersion = 1;

    std::string method;
    Setup setup = Setup::DEV1;
    ConfusionCounts counts;
    Metrics metrics;
    std::map<Label, ClassReport> per_class;  // ChatGPT and Human
    std::vector<EvalReport> folds;           // per-fold reports for k-fold setups
    nlohmann::json config;                   // effective configuration, echoed; null when absent

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);

    bool operator==(const EvalReport&) const = default;
};

// Counts, metrics and both per-class blocks for one set of predictions.
EvalReport make_report(const ConfusionCounts& counts, std::string method = {}, Setup setup = Setup::DEV1);
// Throws EmptyEvaluation for an empty list.
EvalReport per_class_report(std::span<const std::pair<Label, Label>> truth_and_predicted);
// Pooled (micro-averaged) aggregate of fold reports; the folds are kept.
EvalReport aggregate(std::vector<EvalReport> folds, std::string method, Setup setup);

// Logistic regression on the thirteen z-scored features, trained by
// full-batch gradient descent on BCE.
struct LogRegConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 2000;
};

class LogisticRegression {
public:
    using Array = FeatureScaler::Array;

    LogisticRegression() = default;

    // Throws SingleClassTrainingSet or TooFewSamples.
    static LogisticRegression fit(std::span<const FeatureVector> x, std::span<const Label> y, const LogRegConfig& cfg);

    double predict_proba(const FeatureVector& v) const;
    Label predict(const FeatureVector& v) const { return label_for(predict_proba(v)); }

    const Array& weights() const noexcept { return w_; }
    double bias() const noexcept { return b_; }
    const FeatureScaler& scaler() const noexcept { return scaler_; }

    // Mean BCE over already-scaled inputs and its gradient.
    static double loss_and_gradient(const Array& w, double b, std::span<const Array> x, std::span<const double> y,
                                    Array& grad_w, double& grad_b);

private:
    FeatureScaler scaler_;
    Array w_{};
    double b_ = 0.0;
};

EvalReport logreg_baseline(std::span<const FeatureVector> train_x, std::span<const Label> train_y,
                           std::span<const FeatureVector> test_x, std::span<const Label> test_y,
                           const LogRegConfig& cfg = {});

enum class Method { Detector, LogReg };

std::string_view method_name(Method method);

struct ExperimentOptions {
    Method method = Method::Detector;
    ModelConfig model;
    LogRegConfig logreg;
    std::uint64_t seed = 0;
    // Worker threads for folds; results do not depend on it.
    std::size_t threads = 1;
    // Progress messages (thread-safe calls are serialized by the runner).
    std::function<void(const std::string&)> log;
    // Called with each fold's split and trained detector, possibly from a
    // worker thread.
    std::function<void(std::size_t fold, const Split&, const DetectorModel&)> on_fold_model;
};

// Features and lemmatized tokens of every document, computed once.
struct PreparedCorpus {
    std::vector<Preprocessor::Prepared> items;
    std::vector<Label> labels;
};

PreparedCorpus prepare_corpus(std::span<const Document> docs, const Preprocessor& prep, std::size_t threads = 1);

// DEV1: one stratified 80/20 split. DEV5/DEV10: stratified k-fold; each fold
// fits vocabulary and scaler on its training part only and trains a fresh
// model seeded with seed + fold index. Mixed documents are dropped.
// Throws TooFewDocuments or SingleClassTrainingSet.
EvalReport run_experiment(std::span<const Document> docs, Setup setup, const ExperimentOptions& options,
                          const Preprocessor& prep = Preprocessor());
EvalReport run_experiment(const PreparedCorpus& corpus, Setup setup, const ExperimentOptions& options);

enum class ReportFormat { Text, Json };

// Text: a method row, per-class rows and per-fold rows, metrics to 6 decimals.
std::string render_text(const EvalReport& report);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace aicatcher
