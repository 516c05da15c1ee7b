#include "aicatcher/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "aicatcher/errors.hpp"

namespace aicatcher {

using nlohmann::json;

// --- counts and metrics -------------------------------------------------------

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

ConfusionCounts tally(std::span<const Label> truth, std::span<const Label> predicted, Label positive) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction lists differ in length");
    if (positive == Label::Mixed) throw std::invalid_argument("positive class must be Human or ChatGPT");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Label::Mixed || predicted[i] == Label::Mixed) {
            throw std::invalid_argument("binary evaluation got a Mixed label");
        }
        const bool actual = truth[i] == positive;
        const bool said = predicted[i] == positive;
        if (actual && said) ++c.tp;
        else if (!actual && said) ++c.fp;
        else if (!actual) ++c.tn;
        else ++c.fn;
    }
    return c;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw EmptyEvaluation("accuracy of an empty evaluation");
    return ratio(c.tp + c.tn, c.total());
}

double precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

double f1(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = recall(c);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Metrics Metrics::from_counts(const ConfusionCounts& c) {
    Metrics m;
    m.accuracy = aicatcher::accuracy(c);
    m.precision = aicatcher::precision(c);
    m.recall = aicatcher::recall(c);
    m.f1 = aicatcher::f1(c);
    m.precision_degenerate = c.tp + c.fp == 0;
    m.recall_degenerate = c.tp + c.fn == 0;
    m.f1_degenerate = m.precision + m.recall == 0.0;
    return m;
}

ClassReport class_report(const ConfusionCounts& c) {
    ClassReport r;
    r.actual = c.tp + c.fn;
    r.predicted = c.tp + c.fp;
    r.correct = c.tp;
    r.precision = precision(c);
    r.recall = recall(c);
    r.f1 = f1(c);
    r.degenerate = r.actual == 0 || r.predicted == 0 || r.precision + r.recall == 0.0;
    return r;
}

// --- setups -------------------------------------------------------------------

std::string_view to_string(Setup setup) {
    switch (setup) {
        case Setup::DEV1: return "DEV1";
        case Setup::DEV5: return "DEV5";
        case Setup::DEV10: return "DEV10";
    }
    return "?";
}

Setup parse_setup(std::string_view text) {
    std::string s(text);
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "dev1") return Setup::DEV1;
    if (s == "dev5") return Setup::DEV5;
    if (s == "dev10") return Setup::DEV10;
    throw std::invalid_argument("unknown setup '" + std::string(text) + "' (expected dev1, dev5 or dev10)");
}

std::size_t fold_count(Setup setup) {
    switch (setup) {
        case Setup::DEV1: return 1;
        case Setup::DEV5: return 5;
        case Setup::DEV10: return 10;
    }
    return 1;
}

// --- reports --------------------------------------------------------------------

EvalReport make_report(const ConfusionCounts& counts, std::string method, Setup setup) {
    EvalReport r;
    r.method = std::move(method);
    r.setup = setup;
    r.counts = counts;
    r.metrics = Metrics::from_counts(counts);
    r.per_class[Label::ChatGPT] = class_report(counts);
    r.per_class[Label::Human] = class_report(counts.swapped());
    return r;
}

EvalReport per_class_report(std::span<const std::pair<Label, Label>> pairs) {
    if (pairs.empty()) throw EmptyEvaluation("no predictions to report on");
    std::vector<Label> truth;
    std::vector<Label> predicted;
    for (const auto& [t, p] : pairs) {
        truth.push_back(t);
        predicted.push_back(p);
    }
    return make_report(tally(truth, predicted));
}

EvalReport aggregate(std::vector<EvalReport> folds, std::string method, Setup setup) {
    ConfusionCounts pooled;
    for (const auto& f : folds) pooled += f.counts;
    auto r = make_report(pooled, std::move(method), setup);
    r.folds = std::move(folds);
    return r;
}

namespace {

json class_json(const ClassReport& c) {
    return {{"actual", c.actual},       {"predicted", c.predicted}, {"correct", c.correct},
            {"precision", c.precision}, {"recall", c.recall},       {"f1", c.f1},
            {"degenerate", c.degenerate}};
}

ClassReport class_from_json(const json& j) {
    ClassReport c;
    c.actual = j.at("actual").get<std::size_t>();
    c.predicted = j.at("predicted").get<std::size_t>();
    c.correct = j.at("correct").get<std::size_t>();
    c.precision = j.at("precision").get<double>();
    c.recall = j.at("recall").get<double>();
    c.f1 = j.at("f1").get<double>();
    c.degenerate = j.at("degenerate").get<bool>();
    return c;
}

}  // namespace

json EvalReport::to_json() const {
    json degenerate = json::array();
    if (metrics.precision_degenerate) degenerate.push_back("precision");
    if (metrics.recall_degenerate) degenerate.push_back("recall");
    if (metrics.f1_degenerate) degenerate.push_back("f1");
    json j{{"version", kSchemaVersion},
           {"method", method},
           {"setup", to_string(setup)},
           {"counts", {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}}},
           {"metrics",
            {{"accuracy", metrics.accuracy},
             {"precision", metrics.precision},
             {"recall", metrics.recall},
             {"f1", metrics.f1},
             {"degenerate", degenerate}}}};
    json pc = json::object();
    for (const auto& [label, c] : per_class) pc[std::string(aicatcher::to_string(label))] = class_json(c);
    j["per_class"] = pc;
    if (!folds.empty()) {
        json fj = json::array();
        for (const auto& f : folds) fj.push_back(f.to_json());
        j["folds"] = fj;
    }
    if (!config.is_null()) j["config"] = config;
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    const auto version = j.at("version").get<int>();
    if (version != kSchemaVersion) {
        throw std::invalid_argument("unsupported report schema version " + std::to_string(version));
    }
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.setup = parse_setup(j.at("setup").get<std::string>());
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                c.at("fn").get<std::size_t>()};
    const auto& m = j.at("metrics");
    r.metrics.accuracy = m.at("accuracy").get<double>();
    r.metrics.precision = m.at("precision").get<double>();
    r.metrics.recall = m.at("recall").get<double>();
    r.metrics.f1 = m.at("f1").get<double>();
    for (const auto& d : m.at("degenerate")) {
        const auto name = d.get<std::string>();
        if (name == "precision") r.metrics.precision_degenerate = true;
        else if (name == "recall") r.metrics.recall_degenerate = true;
        else if (name == "f1") r.metrics.f1_degenerate = true;
        else throw std::invalid_argument("unknown degenerate metric " + name);
    }
    for (const auto& [name, cj] : j.at("per_class").items()) r.per_class[parse_label(name)] = class_from_json(cj);
    if (j.contains("folds")) {
        for (const auto& f : j.at("folds")) r.folds.push_back(from_json(f));
    }
    if (j.contains("config")) r.config = j.at("config");
    return r;
}

// --- logistic regression baseline ---------------------------------------------------

double LogisticRegression::loss_and_gradient(const Array& w, double b, std::span<const Array> x,
                                             std::span<const double> y, Array& grad_w, double& grad_b) {
    grad_w.fill(0.0);
    grad_b = 0.0;
    if (x.empty()) return 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = b;
        for (std::size_t d = 0; d < w.size(); ++d) z += w[d] * x[i][d];
        const double p = nn::sigmoid(z);
        loss += nn::bce_loss(p, static_cast<int>(y[i]));
        const double g = p - y[i];
        for (std::size_t d = 0; d < w.size(); ++d) grad_w[d] += g * x[i][d];
        grad_b += g;
    }
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& g : grad_w) g *= inv;
    grad_b *= inv;
    return loss * inv;
}

LogisticRegression LogisticRegression::fit(std::span<const FeatureVector> x, std::span<const Label> y,
                                           const LogRegConfig& cfg) {
    if (x.size() != y.size()) throw std::invalid_argument("feature and label lists differ in length");
    const bool human = std::find(y.begin(), y.end(), Label::Human) != y.end();
    const bool chatgpt = std::find(y.begin(), y.end(), Label::ChatGPT) != y.end();
    if (!human || !chatgpt) throw SingleClassTrainingSet("logistic regression needs both classes");

    LogisticRegression model;
    model.scaler_ = FeatureScaler::fit(x);
    std::vector<Array> scaled;
    std::vector<double> target;
    scaled.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == Label::Mixed) throw std::invalid_argument("logistic regression got a Mixed label");
        scaled.push_back(model.scaler_.apply(x[i]));
        target.push_back(y[i] == Label::ChatGPT ? 1.0 : 0.0);
    }
    Array gw{};
    double gb = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        loss_and_gradient(model.w_, model.b_, scaled, target, gw, gb);
        for (std::size_t d = 0; d < gw.size(); ++d) model.w_[d] -= cfg.learning_rate * gw[d];
        model.b_ -= cfg.learning_rate * gb;
    }
    return model;
}

double LogisticRegression::predict_proba(const FeatureVector& v) const {
    const auto z = scaler_.apply(v);
    double s = b_;
    for (std::size_t d = 0; d < w_.size(); ++d) s += w_[d] * z[d];
    return nn::sigmoid(s);
}

EvalReport logreg_baseline(std::span<const FeatureVector> train_x, std::span<const Label> train_y,
                           std::span<const FeatureVector> test_x, std::span<const Label> test_y,
                           const LogRegConfig& cfg) {
    const auto model = LogisticRegression::fit(train_x, train_y, cfg);
    std::vector<Label> predicted;
    predicted.reserve(test_x.size());
    for (const auto& v : test_x) predicted.push_back(model.predict(v));
    return make_report(tally(test_y, predicted), std::string(method_name(Method::LogReg)));
}

// --- experiments ---------------------------------------------------------------------

std::string_view method_name(Method method) {
    return method == Method::Detector ? "AI-Catcher" : "LogReg";
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers; rethrows the
// first failure.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const auto i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

PreparedCorpus prepare_corpus(std::span<const Document> docs, const Preprocessor& prep, std::size_t threads) {
    PreparedCorpus out;
    out.items.resize(docs.size());
    out.labels.reserve(docs.size());
    for (const auto& d : docs) out.labels.push_back(d.label);
    parallel_for(docs.size(), threads, [&](std::size_t i) { out.items[i] = prep.prepare(docs[i].text); });
    return out;
}

EvalReport run_experiment(std::span<const Document> docs, Setup setup, const ExperimentOptions& options,
                          const Preprocessor& prep) {
    const auto binary = filter_binary(docs);
    if (options.log) options.log("extracting features for " + std::to_string(binary.size()) + " documents");
    return run_experiment(prepare_corpus(binary, prep, options.threads), setup, options);
}

EvalReport run_experiment(const PreparedCorpus& corpus, Setup setup, const ExperimentOptions& options) {
    if (corpus.items.size() != corpus.labels.size()) throw std::invalid_argument("prepared corpus is inconsistent");
    for (const auto l : corpus.labels) {
        if (l == Label::Mixed) throw std::invalid_argument("experiments run on Human/ChatGPT documents only");
    }
    const auto plan = setup == Setup::DEV1 ? SplitPlan::holdout(options.seed)
                                           : SplitPlan::kfold(fold_count(setup), options.seed);
    const auto splits = make_splits(corpus.labels, plan);
    const std::string method(method_name(options.method));

    std::mutex log_mutex;
    auto log = [&](const std::string& msg) {
        if (!options.log) return;
        std::lock_guard lock(log_mutex);
        options.log(msg);
    };

    std::vector<EvalReport> folds(splits.size());
    parallel_for(splits.size(), options.threads, [&](std::size_t fold) {
        const auto& split = splits[fold];
        std::vector<FeatureVector> train_x;
        std::vector<Label> train_y;
        std::vector<Label> test_y;
        for (auto i : split.train) {
            train_x.push_back(corpus.items[i].features);
            train_y.push_back(corpus.labels[i]);
        }
        for (auto i : split.test) test_y.push_back(corpus.labels[i]);

        if (options.method == Method::LogReg) {
            std::vector<FeatureVector> test_x;
            for (auto i : split.test) test_x.push_back(corpus.items[i].features);
            folds[fold] = logreg_baseline(train_x, train_y, test_x, test_y, options.logreg);
        } else {
            std::vector<std::vector<std::string>> train_tokens;
            for (auto i : split.train) train_tokens.push_back(corpus.items[i].tokens);
            auto cfg = options.model;
            cfg.seed = options.seed + fold;
            auto model = DetectorModel::build(cfg, Vocabulary::build(train_tokens, cfg.vocab_size),
                                              FeatureScaler::fit(train_x));
            std::vector<TrainingSample> samples;
            samples.reserve(split.train.size());
            for (auto i : split.train) samples.push_back(make_sample(corpus.items[i], model, corpus.labels[i]));
            train(model, samples, [&](std::size_t epoch, double loss) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "fold %zu epoch %zu loss %.6f", fold + 1, epoch + 1, loss);
                log(buf);
            });
            if (options.on_fold_model) options.on_fold_model(fold, split, model);
            std::vector<Label> predicted;
            for (auto i : split.test) {
                const auto s = make_sample(corpus.items[i], model, corpus.labels[i]);
                predicted.push_back(label_for(model.forward(s.sequence, s.features)));
            }
            folds[fold] = make_report(tally(test_y, predicted), method);
        }
        folds[fold].setup = setup;
        folds[fold].method = method;
        log("fold " + std::to_string(fold + 1) + "/" + std::to_string(splits.size()) + " done");
    });

    EvalReport report;
    if (setup == Setup::DEV1) {
        report = std::move(folds.front());
    } else {
        report = aggregate(std::move(folds), method, setup);
    }
    report.config = {{"method", method},
                     {"setup", to_string(setup)},
                     {"seed", options.seed},
                     {"model", options.model.to_json()},
                     {"logreg", {{"learning_rate", options.logreg.learning_rate}, {"epochs", options.logreg.epochs}}}};
    return report;
}

// --- emission ---------------------------------------------------------------------

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string render_text(const EvalReport& r) {
    std::ostringstream out;
    out << pad("Method", 12) << pad("Setup", 7) << pad("Accuracy", 10) << pad("Precision", 11) << pad("Recall", 10)
        << "F1-score\n";
    out << pad(r.method.empty() ? "-" : r.method, 12) << pad(std::string(to_string(r.setup)), 7)
        << pad(fmt6(r.metrics.accuracy), 10) << pad(fmt6(r.metrics.precision), 11) << pad(fmt6(r.metrics.recall), 10)
        << fmt6(r.metrics.f1) << "\n";
    if (r.metrics.precision_degenerate || r.metrics.recall_degenerate) {
        out << "(zero denominator: reported as 0)\n";
    }

    out << "\n"
        << pad("Class", 9) << pad("Actual", 8) << pad("Correct", 9) << pad("Predicted", 11) << pad("Precision", 11)
        << pad("Recall", 10) << "F1-score\n";
    for (const auto label : {Label::ChatGPT, Label::Human}) {
        const auto it = r.per_class.find(label);
        if (it == r.per_class.end()) continue;
        const auto& c = it->second;
        out << pad(std::string(to_string(label)), 9) << pad(std::to_string(c.actual), 8)
            << pad(std::to_string(c.correct), 9) << pad(std::to_string(c.predicted), 11) << pad(fmt6(c.precision), 11)
            << pad(fmt6(c.recall), 10) << fmt6(c.f1) << "\n";
    }

    if (!r.folds.empty()) {
        out << "\n"
            << pad("Fold", 6) << pad("Test", 7) << pad("Accuracy", 10) << pad("Precision", 11) << pad("Recall", 10)
            << "F1-score\n";
        for (std::size_t i = 0; i < r.folds.size(); ++i) {
            const auto& f = r.folds[i];
            out << pad(std::to_string(i + 1), 6) << pad(std::to_string(f.counts.total()), 7)
                << pad(fmt6(f.metrics.accuracy), 10) << pad(fmt6(f.metrics.precision), 11)
                << pad(fmt6(f.metrics.recall), 10) << fmt6(f.metrics.f1) << "\n";
        }
    }
    return out.str();
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
    if (format == ReportFormat::Json) {
        out << report.to_json().dump(2) << "\n";
    } else {
        out << render_text(report);
    }
    if (!out) throw IOFailure("failed writing " + path.string());
}

}  // namespace aicatcher
