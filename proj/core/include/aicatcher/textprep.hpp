#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aicatcher/lexicons.hpp"

namespace aicatcher {

enum class CaseMode { Lower, Preserve };

struct TokenizedText {
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> tokens;  // concatenation of sentences
    std::vector<std::string> words;   // word tokens, in order
    std::vector<std::string> punct;   // punctuation tokens, in order

    std::size_t sentence_count() const noexcept { return sentences.size(); }
    std::size_t word_count() const noexcept { return words.size(); }
};

// Removes bracketed numeric citation markers such as "[3]", "[1, 4]" or
// "[2-7]". Other bracketed text is left alone.
std::u32string strip_citations(std::u32string_view text);
std::string strip_citations(std::string_view text);

// Sentence and word segmentation. Input is NFC-normalized and stripped of
// citation markers first. Word tokens are maximal runs of letters/digits
// with internal apostrophes or hyphens; each punctuation codepoint is its
// own token; everything else (whitespace, symbols) separates tokens.
// Sentences end at '.', '!' or '?' followed by whitespace and an uppercase
// letter, or by end of text, unless the period closes a known abbreviation.
class Tokenizer {
public:
    Tokenizer();
    explicit Tokenizer(std::vector<std::string> abbreviations);

    TokenizedText operator()(std::string_view text, CaseMode mode = CaseMode::Lower) const;

private:
    std::vector<std::u32string> abbreviations_;  // lowercased, ending in '.'
};

TokenizedText tokenize(std::string_view text, CaseMode mode = CaseMode::Lower);

// Rule + lexicon lemmatizer for lowercased English word tokens. Irregular
// forms come from the exception lexicon; the remaining words pass through
// ordered suffix rules. A word whose rule output is not itself a fixed point
// is left unchanged, so lemmatize(lemmatize(w)) == lemmatize(w) always holds.
class Lemmatizer {
public:
    Lemmatizer();
    explicit Lemmatizer(std::unordered_map<std::string, std::string> exceptions);

    std::string operator()(std::string_view word) const;
    std::vector<std::string> operator()(std::span<const std::string> words) const;

private:
    std::string apply_rules(std::string_view word) const;

    std::unordered_map<std::string, std::string> exceptions_;
};

std::vector<std::string> lemmatize(std::span<const std::string> words);

// Word tokens of `t`, lowercased and lemmatized: the CNN-side token stream.
std::vector<std::string> clean(const TokenizedText& t, const Lemmatizer& lemmatizer);

class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kOov = 1;
    static constexpr std::size_t kReserved = 2;
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
    static constexpr int kFormatVersion = 1;

    Vocabulary() = default;

    // Keeps the size_cap - 2 most frequent words; ties go to the
    // lexicographically smaller word. Throws EmptyTrainingSet when no
    // document contributes a word, std::invalid_argument when size_cap < 3.
    static Vocabulary build(std::span<const std::vector<std::string>> documents, std::size_t size_cap);

    std::int32_t index_of(std::string_view word) const;
    std::optional<std::string> word_at(std::int32_t index) const;

    // Number of valid indices, reserved ones included.
    std::size_t size() const noexcept { return word_to_index_.size() + kReserved; }
    std::size_t word_count() const noexcept { return word_to_index_.size(); }
    std::size_t size_cap() const noexcept { return size_cap_; }
    bool contains(std::string_view word) const;
    const std::map<std::string, std::int32_t, std::less<>>& words() const noexcept { return word_to_index_; }

    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);

    bool operator==(const Vocabulary&) const = default;

private:
    std::map<std::string, std::int32_t, std::less<>> word_to_index_;
    std::vector<std::string> index_to_word_;
    std::size_t size_cap_ = kUnlimited;
};

enum class Truncation { KeepHead, KeepTail };

struct EncodedSequence {
    std::vector<std::int32_t> indices;
    std::size_t true_length = 0;

    bool operator==(const EncodedSequence&) const = default;
};

// Maps tokens to vocabulary indices (OOV for unknown words) and pads with
// PAD on the right to exactly max_seq_len. KeepHead keeps the opening of
// long sequences, KeepTail the ending.
EncodedSequence encode_and_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                               std::size_t max_seq_len, Truncation truncation = Truncation::KeepHead);

// Inverse of encode_and_pad over the unpadded prefix; OOV becomes "<oov>".
std::vector<std::string> decode(const EncodedSequence& seq, const Vocabulary& vocab);

}  // namespace aicatcher
