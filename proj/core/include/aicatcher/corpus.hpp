#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace aicatcher {

enum class Label { Human, ChatGPT, Mixed };

std::string_view to_string(Label label);
// Case-insensitive; throws UnknownLabel.
Label parse_label(std::string_view text);

struct Document {
    std::string id;
    std::string text;
    Label label = Label::Human;
    std::string topic;

    bool operator==(const Document&) const = default;
};

enum class CorpusFormat { Auto, Csv, Jsonl };

// Reads AIGTxt-style records. JSONL: one object per line with keys text,
// label and optional id/topic. CSV: RFC-4180 with a header naming at least
// text and label. Missing ids become the zero-based record index.
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::Auto);
std::vector<Document> parse_jsonl(std::string_view content);
std::vector<Document> parse_csv(std::string_view content);

void save_jsonl(std::span<const Document> docs, const std::filesystem::path& path);

// Documents labeled Human or ChatGPT, order preserved.
std::vector<Document> filter_binary(std::span<const Document> docs);

struct LengthSummary {
    std::size_t count = 0;
    double avg_words = 0.0;
    std::size_t min_words = 0;
    std::size_t max_words = 0;
    std::size_t unique_words = 0;  // stopwords excluded
};

struct CorpusStats {
    std::size_t n_total = 0;
    std::map<Label, std::size_t> n_per_class;
    std::map<std::string, std::size_t> n_per_topic;
    double avg_paragraph_len_words = 0.0;
    std::size_t min_paragraph_len_words = 0;
    std::size_t max_paragraph_len_words = 0;
    std::size_t n_unique_words = 0;
    std::map<std::string, LengthSummary> per_topic;
};

// Word counts use the tokenizer (citation markers stripped); the unique
// word count is over lowercased word tokens minus `stopwords`.
CorpusStats compute_stats(std::span<const Document> docs, const std::unordered_set<std::string>& stopwords);
CorpusStats compute_stats(std::span<const Document> docs);

struct SplitPlan {
    enum class Mode { Holdout80_20, KFold };
    Mode mode = Mode::Holdout80_20;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    bool stratified = true;

    static SplitPlan holdout(std::uint64_t seed, bool stratified = true) {
        return {Mode::Holdout80_20, 0, seed, stratified};
    }
    static SplitPlan kfold(std::size_t k, std::uint64_t seed, bool stratified = true) {
        return {Mode::KFold, k, seed, stratified};
    }
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Holdout: one split with round(0.2 n) test documents. KFold(k): k splits
// whose test folds partition the index set, sizes within 1 of each other.
// Stratified plans keep each class's share of every fold within one
// document of its corpus share. Indices in each list are ascending.
std::vector<Split> make_splits(std::span<const Document> docs, const SplitPlan& plan);
std::vector<Split> make_splits(std::span<const Label> labels, const SplitPlan& plan);

}  // namespace aicatcher
