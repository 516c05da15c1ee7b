#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "aicatcher/corpus.hpp"
#include "aicatcher/errors.hpp"
#include "aicatcher/evalkit.hpp"
#include "aicatcher/model.hpp"
#include "run_config.hpp"
#include "server.hpp"

namespace aicatcher::cli {

using nlohmann::json;

namespace {

std::atomic<bool> g_shutdown{false};

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    bool verbose = false;
};

struct Context {
    RunConfig config;
    std::shared_ptr<spdlog::logger> log;
    CliStreams io;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "key=value configuration file");
    cmd->add_option("--set", c.sets, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_flag("-q,--quiet", c.quiet, "only log warnings and errors");
    cmd->add_flag("-v,--verbose", c.verbose, "debug logging");
}

Context make_context(const Common& c, CliStreams io, const GetEnv& getenv) {
    Context ctx{RunConfig(), nullptr, io};
    if (!c.config_file.empty()) ctx.config.load_file(c.config_file);
    ctx.config.load_env(getenv);
    for (const auto& s : c.sets) ctx.config.set_assignment(s, ConfigSource::Flag);
    if (c.seed) ctx.config.set("seed", std::to_string(*c.seed), ConfigSource::Flag);

    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(io.err, true);
    ctx.log = std::make_shared<spdlog::logger>("aicatcher", sink);
    ctx.log->set_pattern("[%l] %v");
    ctx.log->set_level(c.quiet ? spdlog::level::warn : c.verbose ? spdlog::level::debug : spdlog::level::info);
    return ctx;
}

std::shared_ptr<const Lexicons> lexicons_for(const RunConfig& cfg) {
    const auto& dir = cfg.get("lexicon_dir");
    if (dir.empty()) return std::shared_ptr<const Lexicons>(&Lexicons::builtin(), [](const Lexicons*) {});
    return std::make_shared<const Lexicons>(Lexicons::load(dir));
}

std::shared_ptr<const Preprocessor> preprocessor_for(const Context& ctx) {
    const auto& cfg = ctx.config;
    auto lex = lexicons_for(cfg);
    auto heuristic = std::make_shared<HeuristicGrammarBackend>(lex->agreement_patterns);
    std::shared_ptr<const GrammarChecker> checker;
    if (cfg.get("grammar.backend") == "remote") {
        RemoteGrammarConfig rc;
        rc.endpoint = cfg.get("grammar.endpoint");
        if (rc.endpoint.empty()) {
            throw ConfigError("grammar.backend=remote needs grammar.endpoint (or AICATCHER_GRAMMAR_URL)");
        }
        rc.language = cfg.get("grammar.language");
        rc.timeout = std::chrono::milliseconds(cfg.get_uint("grammar.timeout_ms"));
        rc.retries = cfg.get_uint("grammar.retries");
        rc.max_in_flight = std::max<std::uint64_t>(1, cfg.get_uint("grammar.max_in_flight"));
        std::shared_ptr<const GrammarBackend> remote;
        try {
            remote = std::make_shared<RemoteGrammarBackend>(rc);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (cfg.get_bool("grammar.fallback")) {
            auto log = ctx.log;
            checker = std::make_shared<GrammarChecker>(remote, heuristic, [log](const std::string& reason) {
                log->warn("grammar service unavailable, using heuristic counts: {}", reason);
            });
        } else {
            checker = std::make_shared<GrammarChecker>(remote);
        }
    } else {
        checker = std::make_shared<GrammarChecker>(heuristic);
    }
    return std::make_shared<const Preprocessor>(lex, checker);
}

CorpusFormat parse_format(const std::string& f) {
    if (f == "auto") return CorpusFormat::Auto;
    if (f == "csv") return CorpusFormat::Csv;
    if (f == "jsonl") return CorpusFormat::Jsonl;
    throw ConfigError("unknown corpus format '" + f + "'");
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IOFailure("failed writing " + path);
}

std::string read_all(std::istream& in) { return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}; }

// --- train ---------------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string data;
    std::string out = "model.bin";
    std::string log_path;
    std::string format = "auto";
};

int cmd_train(const TrainArgs& a, Context& ctx) {
    const auto model_cfg = ctx.config.model_config();
    const auto prep = preprocessor_for(ctx);
    const auto docs = filter_binary(load_corpus(a.data, parse_format(a.format)));
    ctx.log->info("loaded {} Human/ChatGPT documents from {}", docs.size(), a.data);
    const auto corpus = prepare_corpus(docs, *prep, ctx.config.get_uint("threads"));

    std::vector<std::vector<std::string>> tokens;
    std::vector<FeatureVector> features;
    for (const auto& item : corpus.items) {
        tokens.push_back(item.tokens);
        features.push_back(item.features);
    }
    auto model = DetectorModel::build(model_cfg, Vocabulary::build(tokens, model_cfg.vocab_size),
                                      FeatureScaler::fit(features));
    std::vector<TrainingSample> samples;
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        samples.push_back(make_sample(corpus.items[i], model, corpus.labels[i]));
    }
    ctx.log->info("training on {} documents, vocabulary {}, {} parameters", samples.size(), model.vocabulary().size(),
                  model.parameter_count());
    const auto report = train(model, samples, [&](std::size_t epoch, double loss) {
        ctx.log->info("epoch {}/{} loss {:.6f}", epoch + 1, model_cfg.epochs, loss);
    });
    save_model(model, a.out);

    const json log{{"command", "train"},
                   {"data", a.data},
                   {"model", a.out},
                   {"seed", model_cfg.seed},
                   {"documents", samples.size()},
                   {"vocabulary_size", model.vocabulary().size()},
                   {"loss_curve", report.loss_curve},
                   {"epochs_run", report.epochs_run},
                   {"final_train_loss", model.training_meta().final_train_loss},
                   {"model_fingerprint", model_fingerprint(model)},
                   {"config", ctx.config.to_json()}};
    const auto log_path = a.log_path.empty() ? a.out + ".log.json" : a.log_path;
    write_text(log_path, log.dump(2) + "\n");
    ctx.log->info("wrote {} and {}", a.out, log_path);
    return kExitOk;
}

// --- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
    Common common;
    std::string data;
    std::string setup = "dev1";
    std::string method = "detector";
    std::string out;
    std::string text_out;
    std::string format = "auto";
};

int cmd_evaluate(const EvaluateArgs& a, Context& ctx) {
    Setup setup;
    try {
        setup = parse_setup(a.setup);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    ExperimentOptions opt;
    opt.model = ctx.config.model_config();
    opt.logreg = ctx.config.logreg_config();
    opt.seed = ctx.config.seed();
    opt.threads = ctx.config.get_uint("threads");
    if (a.method == "detector") opt.method = Method::Detector;
    else if (a.method == "logreg") opt.method = Method::LogReg;
    else throw ConfigError("unknown method '" + a.method + "' (expected detector or logreg)");
    opt.log = [&](const std::string& m) { ctx.log->info("{}", m); };

    const auto prep = preprocessor_for(ctx);
    const auto docs = load_corpus(a.data, parse_format(a.format));
    auto report = run_experiment(docs, setup, opt, *prep);
    auto echoed = ctx.config.to_json();
    echoed["command"] = "evaluate";
    echoed["setup"] = to_string(setup);
    echoed["method"] = method_name(opt.method);
    echoed["data"] = a.data;
    report.config = echoed;

    const auto text = render_text(report);
    ctx.io.out << text;
    if (!a.out.empty()) emit_report(report, ReportFormat::Json, a.out);
    if (!a.text_out.empty()) emit_report(report, ReportFormat::Text, a.text_out);
    return kExitOk;
}

// --- predict / features ------------------------------------------------------------

struct PredictArgs {
    Common common;
    std::string model;
    std::string text;
    std::string file;
    bool batch = false;
};

std::string input_text(const PredictArgs& a, Context& ctx) {
    if (!a.text.empty()) return a.text;
    if (!a.file.empty()) {
        std::ifstream in(a.file, std::ios::binary);
        if (!in) throw IOFailure("cannot read " + a.file);
        return read_all(in);
    }
    return read_all(ctx.io.in);
}

json prediction_json(const Prediction& p) {
    return {{"label", to_string(p.label)}, {"p_chatgpt", p.p_chatgpt}, {"features", p.features.to_json()}};
}

int cmd_predict(const PredictArgs& a, Context& ctx) {
    const auto model = load_model(a.model);
    const auto prep = preprocessor_for(ctx);
    if (!a.batch) {
        ctx.io.out << prediction_json(predict(model, *prep, input_text(a, ctx))).dump() << "\n";
        return kExitOk;
    }
    std::istringstream lines(input_text(a, ctx));
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord(number, e.what());
        }
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            throw MalformedRecord(number, "expected an object with a string field \"text\"");
        }
        auto out = prediction_json(predict(model, *prep, record["text"].get<std::string>()));
        if (record.contains("id")) out["id"] = record["id"];
        ctx.io.out << out.dump() << "\n";
    }
    return kExitOk;
}

int cmd_features(const PredictArgs& a, Context& ctx) {
    const auto prep = preprocessor_for(ctx);
    ctx.io.out << prep->prepare(input_text(a, ctx)).features.to_json().dump() << "\n";
    return kExitOk;
}

// --- serve ---------------------------------------------------------------------

struct ServeArgs {
    Common common;
    std::string model;
    std::string host = "127.0.0.1";
    int port = 8080;
};

int cmd_serve(const ServeArgs& a, Context& ctx) {
    auto model = std::make_shared<const DetectorModel>(load_model(a.model));
    ServeOptions opt;
    opt.max_body_bytes = ctx.config.get_uint("serve.max_body_bytes");
    opt.threads = ctx.config.get_uint("serve.threads");
    DetectionServer server(model, preprocessor_for(ctx), opt, ctx.log);
    if (!server.bind(a.host, a.port)) {
        ctx.log->error("cannot bind {}:{}", a.host, a.port);
        return kExitFailure;
    }
    g_shutdown = false;
    std::thread watcher([&] {
        while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    ctx.log->info("serving model {} on http://{}:{}", model_fingerprint(*model), a.host, a.port);
    server.listen_after_bind();
    g_shutdown = true;
    watcher.join();
    return kExitOk;
}

// --- stats ---------------------------------------------------------------------

struct StatsArgs {
    Common common;
    std::string data;
    std::string format = "auto";
    bool as_json = false;
};

std::string row(const std::string& a, const std::string& b, std::size_t width = 36) {
    std::string s = a;
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s + b + "\n";
}

std::string fixed(double v, int digits) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

int cmd_stats(const StatsArgs& a, Context& ctx) {
    const auto lex = lexicons_for(ctx.config);
    const auto docs = load_corpus(a.data, parse_format(a.format));
    const auto s = compute_stats(docs, lex->stopwords);
    std::size_t classes = 0;
    for (const auto& [label, n] : s.n_per_class) classes += n > 0;

    if (a.as_json) {
        json per_class = json::object();
        for (const auto& [label, n] : s.n_per_class) per_class[std::string(to_string(label))] = n;
        json topics = json::object();
        for (const auto& [topic, t] : s.per_topic) {
            topics[topic] = {{"documents", t.count},      {"avg_words", t.avg_words},
                             {"min_words", t.min_words},  {"max_words", t.max_words},
                             {"unique_words", t.unique_words}};
        }
        ctx.io.out << json{{"n_total", s.n_total},
                           {"n_classes", classes},
                           {"n_topics", s.n_per_topic.size()},
                           {"n_per_class", per_class},
                           {"avg_paragraph_len_words", s.avg_paragraph_len_words},
                           {"min_paragraph_len_words", s.min_paragraph_len_words},
                           {"max_paragraph_len_words", s.max_paragraph_len_words},
                           {"n_unique_words", s.n_unique_words},
                           {"per_topic", topics}}
                          .dump(2)
                   << "\n";
        return kExitOk;
    }

    std::string out = row("Measure", "Value");
    out += row("Number of documents", std::to_string(s.n_total));
    out += row("Number of classes", std::to_string(classes));
    for (const auto& [label, n] : s.n_per_class) {
        out += row("  " + std::string(to_string(label)) + " documents", std::to_string(n));
    }
    out += row("Number of topics", std::to_string(s.n_per_topic.size()));
    out += row("Average paragraph length (words)", fixed(s.avg_paragraph_len_words, 2));
    out += row("Minimum paragraph length (words)", std::to_string(s.min_paragraph_len_words));
    out += row("Maximum paragraph length (words)", std::to_string(s.max_paragraph_len_words));
    out += row("Unique words (no stopwords)", std::to_string(s.n_unique_words));
    if (!s.per_topic.empty()) {
        std::size_t width = 8;
        for (const auto& [topic, t] : s.per_topic) width = std::max(width, topic.size() + 2);
        auto cell = [](std::string v, std::size_t w) {
            if (v.size() < w) v.append(w - v.size(), ' ');
            return v;
        };
        out += "\n" + cell("Topic", width) + cell("Docs", 7) + cell("Avg", 9) + cell("Min", 6) + cell("Max", 6) +
               "Unique\n";
        for (const auto& [topic, t] : s.per_topic) {
            out += cell(topic, width) + cell(std::to_string(t.count), 7) + cell(fixed(t.avg_words, 2), 9) +
                   cell(std::to_string(t.min_words), 6) + cell(std::to_string(t.max_words), 6) +
                   std::to_string(t.unique_words) + "\n";
        }
    }
    ctx.io.out << out;
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const CorruptModelFile*>(&e) || dynamic_cast<const VersionMismatch*>(&e)) return kExitModel;
    if (dynamic_cast<const GrammarServiceUnavailable*>(&e)) return kExitGrammar;
    if (dynamic_cast<const IOFailure*>(&e) || dynamic_cast<const MalformedRecord*>(&e) ||
        dynamic_cast<const UnknownLabel*>(&e) || dynamic_cast<const EmptyCorpus*>(&e) ||
        dynamic_cast<const TooFewDocuments*>(&e) || dynamic_cast<const EmptyTrainingSet*>(&e) ||
        dynamic_cast<const SingleClassTrainingSet*>(&e) || dynamic_cast<const TooFewSamples*>(&e)) {
        return kExitData;
    }
    return kExitFailure;
}

}  // namespace

void request_shutdown() { g_shutdown = true; }

int run_cli(int argc, const char* const* argv, CliStreams io, const GetEnv& getenv) {
    CLI::App app{"Detects ChatGPT-written scientific paragraphs.", "aicatcher"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a detector and write a model file");
    train_cmd->add_option("--data", train_args.data, "corpus (JSONL or CSV)")->required();
    train_cmd->add_option("--out", train_args.out, "model file")->capture_default_str();
    train_cmd->add_option("--log", train_args.log_path, "training log (default: <out>.log.json)");
    train_cmd->add_option("--format", train_args.format, "auto, jsonl or csv")->capture_default_str();
    add_common(train_cmd, train_args.common);

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "run a DEV1/DEV5/DEV10 experiment");
    eval_cmd->add_option("--data", eval_args.data, "corpus (JSONL or CSV)")->required();
    eval_cmd->add_option("--setup", eval_args.setup, "dev1, dev5 or dev10")->capture_default_str();
    eval_cmd->add_option("--method", eval_args.method, "detector or logreg")->capture_default_str();
    eval_cmd->add_option("--out", eval_args.out, "JSON report path");
    eval_cmd->add_option("--text-out", eval_args.text_out, "text report path");
    eval_cmd->add_option("--format", eval_args.format, "auto, jsonl or csv")->capture_default_str();
    add_common(eval_cmd, eval_args.common);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "classify text with a trained model");
    predict_cmd->add_option("--model", predict_args.model, "model file")->required();
    predict_cmd->add_option("--text", predict_args.text, "text to classify");
    predict_cmd->add_option("--file", predict_args.file, "read the text (or JSONL batch) from a file");
    predict_cmd->add_flag("--batch", predict_args.batch, "input is JSONL with a \"text\" field per line");
    add_common(predict_cmd, predict_args.common);

    PredictArgs feature_args;
    auto* features_cmd = app.add_subcommand("features", "print the linguistic feature vector of a text");
    features_cmd->add_option("--text", feature_args.text, "text");
    features_cmd->add_option("--file", feature_args.file, "read the text from a file");
    add_common(features_cmd, feature_args.common);

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "serve /v1/detect over HTTP");
    serve_cmd->add_option("--model", serve_args.model, "model file")->required();
    serve_cmd->add_option("--host", serve_args.host, "bind address")->capture_default_str();
    serve_cmd->add_option("--port", serve_args.port, "port")->capture_default_str();
    add_common(serve_cmd, serve_args.common);

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "summarize a corpus");
    stats_cmd->add_option("--data", stats_args.data, "corpus (JSONL or CSV)")->required();
    stats_cmd->add_option("--format", stats_args.format, "auto, jsonl or csv")->capture_default_str();
    stats_cmd->add_flag("--json", stats_args.as_json, "machine-readable output");
    add_common(stats_cmd, stats_args.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        io.out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        io.out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        io.err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitConfig;
    }

    const auto* chosen = app.get_subcommands().front();
    try {
        if (chosen == train_cmd) {
            auto ctx = make_context(train_args.common, io, getenv);
            return cmd_train(train_args, ctx);
        }
        if (chosen == eval_cmd) {
            auto ctx = make_context(eval_args.common, io, getenv);
            return cmd_evaluate(eval_args, ctx);
        }
        if (chosen == predict_cmd) {
            auto ctx = make_context(predict_args.common, io, getenv);
            return cmd_predict(predict_args, ctx);
        }
        if (chosen == features_cmd) {
            auto ctx = make_context(feature_args.common, io, getenv);
            return cmd_features(feature_args, ctx);
        }
        if (chosen == serve_cmd) {
            auto ctx = make_context(serve_args.common, io, getenv);
            return cmd_serve(serve_args, ctx);
        }
        auto ctx = make_context(stats_args.common, io, getenv);
        return cmd_stats(stats_args, ctx);
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace aicatcher::cli
