#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aicatcher/grammar.hpp"
#include "aicatcher/lexicons.hpp"
#include "aicatcher/textprep.hpp"

namespace aicatcher {

// The thirteen linguistic/statistical features, in canonical order.
struct FeatureVector {
    static constexpr std::size_t kSize = 13;
    static const std::array<std::string_view, kSize> kNames;

    double avg_sentence_len = 0.0;
    double avg_word_len = 0.0;
    double unique_word_ratio = 0.0;
    std::size_t grammar_error_count = 0;
    std::size_t discourse_marker_count = 0;
    double noun_ratio = 0.0;
    double pronoun_ratio = 0.0;
    double verb_ratio = 0.0;
    double adverb_ratio = 0.0;
    double adjective_ratio = 0.0;
    double punctuation_ratio = 0.0;
    double stopword_ratio = 0.0;
    double sentiment_word_ratio = 0.0;

    // Provenance of grammar_error_count; not one of the thirteen values.
    GrammarSource grammar_source = GrammarSource::Heuristic;

    std::array<double, kSize> values() const;
    static FeatureVector from_values(std::span<const double, kSize> v);

    nlohmann::json to_json() const;

    bool operator==(const FeatureVector&) const = default;
};

struct PosRatios {
    double noun = 0.0;
    double pronoun = 0.0;
    double verb = 0.0;
    double adverb = 0.0;
    double adjective = 0.0;
    double other = 0.0;
};

class PosTagger {
public:
    PosTagger();
    PosTagger(std::unordered_map<std::string, PosTag> lexicon, std::unordered_set<std::string> pronouns);

    // Closed-class pronouns first, then the lexicon, then suffix rules.
    PosTag tag(std::string_view lowercase_word) const;

private:
    std::unordered_map<std::string, PosTag> lexicon_;
    std::unordered_set<std::string> pronouns_;
};

double avg_sentence_length(const TokenizedText& t);
double avg_word_length(const TokenizedText& t);
double unique_word_ratio(const TokenizedText& t);
std::size_t discourse_marker_count(const TokenizedText& t, std::span<const std::vector<std::string>> markers);
PosRatios pos_ratios(const TokenizedText& t, const PosTagger& tagger);
double punctuation_ratio(const TokenizedText& t);
double stopword_ratio(const TokenizedText& t, const std::unordered_set<std::string>& stopwords);
double sentiment_word_ratio(const TokenizedText& t, const std::unordered_map<std::string, double>& polarity);
GrammarResult grammar_error_count(std::string_view raw_text, const GrammarChecker& checker);

// Tokenizes once and assembles all thirteen features. Lexical features use
// the lowercased view; the grammar backend receives the raw text.
class FeatureExtractor {
public:
    FeatureExtractor();
    FeatureExtractor(std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const GrammarChecker> grammar);

    FeatureVector extract(std::string_view raw_text) const;
    FeatureVector extract(std::string_view raw_text, const TokenizedText& lowered) const;

    const Tokenizer& tokenizer() const noexcept { return tokenizer_; }
    const Lexicons& lexicons() const noexcept { return *lexicons_; }
    const GrammarChecker& grammar() const noexcept { return *grammar_; }

private:
    std::shared_ptr<const Lexicons> lexicons_;
    std::shared_ptr<const GrammarChecker> grammar_;
    Tokenizer tokenizer_;
    PosTagger tagger_;
};

// Per-dimension z-scoring fitted on training vectors (population standard
// deviation; dimensions with zero spread get stddev 1).
class FeatureScaler {
public:
    using Array = std::array<double, FeatureVector::kSize>;

    FeatureScaler();  // identity
    FeatureScaler(const Array& means, const Array& stddevs);

    // Throws TooFewSamples for fewer than two vectors.
    static FeatureScaler fit(std::span<const FeatureVector> train);
    static FeatureScaler fit(std::span<const Array> train);

    Array apply(const Array& x) const;
    Array apply(const FeatureVector& v) const { return apply(v.values()); }
    Array invert(const Array& z) const;

    const Array& means() const noexcept { return means_; }
    const Array& stddevs() const noexcept { return stddevs_; }

    nlohmann::json to_json() const;
    static FeatureScaler from_json(const nlohmann::json& j);

    bool operator==(const FeatureScaler&) const = default;

private:
    Array means_{};
    Array stddevs_{};
};

}  // namespace aicatcher
