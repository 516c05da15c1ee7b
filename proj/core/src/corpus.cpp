#include "aicatcher/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "aicatcher/lexicons.hpp"
#include "aicatcher/rng.hpp"
#include "aicatcher/textprep.hpp"
#include "unicode.hpp"

namespace aicatcher {

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Human: return "Human";
        case Label::ChatGPT: return "ChatGPT";
        case Label::Mixed: return "Mixed";
    }
    return "Human";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOFailure("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IOFailure("error reading " + path.string());
    return buf.str();
}

Document make_document(std::size_t line, std::size_t record, std::optional<std::string> id, std::optional<std::string> text,
                       std::optional<std::string> label, std::optional<std::string> topic) {
    if (!text) throw MalformedRecord(line, "missing text");
    if (!label) throw MalformedRecord(line, "missing label");
    if (trim(*text).empty()) throw MalformedRecord(line, "empty text");
    Document doc;
    doc.id = id && !id->empty() ? *id : std::to_string(record);
    doc.text = std::move(*text);
    doc.label = parse_label(*label);
    doc.topic = topic ? std::move(*topic) : std::string{};
    return doc;
}

}  // namespace

Label parse_label(std::string_view text) {
    const auto lowered = ascii_lower(trim(text));
    if (lowered == "human") return Label::Human;
    if (lowered == "chatgpt") return Label::ChatGPT;
    if (lowered == "mixed") return Label::Mixed;
    throw UnknownLabel(std::string(text));
}

std::vector<Document> parse_jsonl(std::string_view content) {
    std::vector<Document> docs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        ++line_no;
        const auto line = trim(content.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw MalformedRecord(line_no, "expected a JSON object");
        auto field = [&](const char* key) -> std::optional<std::string> {
            auto it = j.find(key);
            if (it == j.end() || it->is_null()) return std::nullopt;
            if (it->is_string()) return it->get<std::string>();
            if (it->is_number()) return it->dump();
            throw MalformedRecord(line_no, std::string("field '") + key + "' must be a string");
        };
        docs.push_back(make_document(line_no, docs.size(), field("id"), field("text"), field("label"), field("topic")));
    }
    return docs;
}

namespace {

struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRecord> split_csv(std::string_view s) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    std::size_t line = 1;
    current.line = line;
    bool in_quotes = false;
    bool any = false;
    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        const bool blank = current.fields.size() == 1 && current.fields[0].empty();
        if (!blank) records.push_back(std::move(current));
        current = CsvRecord{};
        current.line = line;
        any = false;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        any = true;
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw MalformedRecord(current.line, "unterminated quoted field");
    if (any || !field.empty() || !current.fields.empty()) end_record();
    return records;
}

}  // namespace

std::vector<Document> parse_csv(std::string_view content) {
    auto records = split_csv(content);
    if (records.empty()) throw MalformedRecord(1, "missing CSV header");
    const auto& header = records.front().fields;
    std::optional<std::size_t> col_id, col_text, col_label, col_topic;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = ascii_lower(trim(header[i]));
        if (name == "id") col_id = i;
        else if (name == "text") col_text = i;
        else if (name == "label") col_label = i;
        else if (name == "topic") col_topic = i;
    }
    if (!col_text || !col_label) throw MalformedRecord(1, "CSV header must name text and label columns");

    std::vector<Document> docs;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        auto get = [&](std::optional<std::size_t> col) -> std::optional<std::string> {
            if (!col || *col >= rec.fields.size()) return std::nullopt;
            return rec.fields[*col];
        };
        docs.push_back(make_document(rec.line, docs.size(), get(col_id), get(col_text), get(col_label), get(col_topic)));
    }
    return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    if (format == CorpusFormat::Auto) {
        format = ascii_lower(path.extension().string()) == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
    }
    const auto content = read_file(path);
    return format == CorpusFormat::Csv ? parse_csv(content) : parse_jsonl(content);
}

void save_jsonl(std::span<const Document> docs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot write " + path.string());
    for (const auto& d : docs) {
        nlohmann::json j{{"id", d.id}, {"text", d.text}, {"label", to_string(d.label)}, {"topic", d.topic}};
        out << j.dump() << '\n';
    }
    if (!out) throw IOFailure("error writing " + path.string());
}

std::vector<Document> filter_binary(std::span<const Document> docs) {
    std::vector<Document> out;
    std::copy_if(docs.begin(), docs.end(), std::back_inserter(out),
                 [](const Document& d) { return d.label != Label::Mixed; });
    return out;
}

CorpusStats compute_stats(std::span<const Document> docs, const std::unordered_set<std::string>& stopwords) {
    if (docs.empty()) throw EmptyCorpus("cannot summarize an empty corpus");

    struct Accumulator {
        std::size_t count = 0;
        std::size_t total_words = 0;
        std::size_t min_words = SIZE_MAX;
        std::size_t max_words = 0;
        std::unordered_set<std::string> unique;

        void add(std::size_t words) {
            ++count;
            total_words += words;
            min_words = std::min(min_words, words);
            max_words = std::max(max_words, words);
        }
        LengthSummary summary() const {
            return {count, count ? static_cast<double>(total_words) / static_cast<double>(count) : 0.0,
                    count ? min_words : 0, max_words, unique.size()};
        }
    };

    CorpusStats stats;
    Accumulator all;
    std::map<std::string, Accumulator> topics;
    for (const auto& doc : docs) {
        const auto t = tokenize(doc.text, CaseMode::Lower);
        ++stats.n_per_class[doc.label];
        ++stats.n_per_topic[doc.topic];
        auto& topic = topics[doc.topic];
        all.add(t.word_count());
        topic.add(t.word_count());
        for (const auto& w : t.words) {
            if (stopwords.count(w)) continue;
            all.unique.insert(w);
            topic.unique.insert(w);
        }
    }
    const auto summary = all.summary();
    stats.n_total = docs.size();
    stats.avg_paragraph_len_words = summary.avg_words;
    stats.min_paragraph_len_words = summary.min_words;
    stats.max_paragraph_len_words = summary.max_words;
    stats.n_unique_words = summary.unique_words;
    for (const auto& [name, acc] : topics) stats.per_topic.emplace(name, acc.summary());
    return stats;
}

CorpusStats compute_stats(std::span<const Document> docs) {
    return compute_stats(docs, Lexicons::builtin().stopwords);
}

std::vector<Split> make_splits(std::span<const Label> labels, const SplitPlan& plan) {
    const std::size_t n = labels.size();
    const bool kfold = plan.mode == SplitPlan::Mode::KFold;
    if (kfold && plan.k < 2) throw std::invalid_argument("k-fold splits need k >= 2");
    const std::size_t min_docs = kfold ? plan.k : 5;
    if (n < min_docs) {
        throw TooFewDocuments("need at least " + std::to_string(min_docs) + " documents, got " + std::to_string(n));
    }

    Rng rng(plan.seed);
    // Class groups in label order, each shuffled. Unstratified plans use a
    // single group.
    std::vector<std::vector<std::size_t>> groups;
    if (plan.stratified) {
        std::map<Label, std::vector<std::size_t>> by_label;
        for (std::size_t i = 0; i < n; ++i) by_label[labels[i]].push_back(i);
        for (auto& [label, idx] : by_label) groups.push_back(std::move(idx));
    } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }
    for (auto& g : groups) rng.shuffle(std::span<std::size_t>(g));

    auto finish = [n](std::vector<std::size_t> test) {
        std::sort(test.begin(), test.end());
        std::vector<bool> in_test(n, false);
        for (auto i : test) in_test[i] = true;
        Split s;
        s.test = std::move(test);
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_test[i]) s.train.push_back(i);
        }
        return s;
    };

    if (!kfold) {
        const auto n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
        // Largest-remainder allocation of the test quota across groups.
        std::vector<std::size_t> quota(groups.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double exact = static_cast<double>(groups[g].size()) * static_cast<double>(n_test) / static_cast<double>(n);
            quota[g] = static_cast<std::size_t>(std::floor(exact));
            assigned += quota[g];
            remainders.emplace_back(exact - std::floor(exact), g);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; assigned < n_test && r < remainders.size(); ++r, ++assigned) {
            ++quota[remainders[r].second];
        }
        std::vector<std::size_t> test;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            test.insert(test.end(), groups[g].begin(), groups[g].begin() + static_cast<std::ptrdiff_t>(quota[g]));
        }
        return {finish(std::move(test))};
    }

    // Round-robin over the concatenated groups: fold sizes differ by at most
    // one and every class is spread evenly.
    std::vector<std::vector<std::size_t>> folds(plan.k);
    std::size_t pos = 0;
    for (const auto& g : groups) {
        for (auto idx : g) folds[pos++ % plan.k].push_back(idx);
    }
    std::vector<Split> splits;
    splits.reserve(plan.k);
    for (auto& f : folds) splits.push_back(finish(std::move(f)));
    return splits;
}

std::vector<Split> make_splits(std::span<const Document> docs, const SplitPlan& plan) {
    std::vector<Label> labels;
    labels.reserve(docs.size());
    for (const auto& d : docs) labels.push_back(d.label);
    return make_splits(std::span<const Label>(labels), plan);
}

}  // namespace aicatcher
