#include "aicatcher/textprep.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "unicode.hpp"

namespace aicatcher {

namespace {

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }
bool is_ascii_space(char32_t cp) { return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r'; }

bool is_citation_separator(char32_t cp) {
    return cp == U',' || cp == U'-' || cp == U'–' || cp == U'—' || cp == U';';
}

bool is_internal_joiner(char32_t cp) {
    return cp == U'\'' || cp == U'’' || cp == U'-' || cp == U'‐' || cp == U'‑';
}

bool is_terminator(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

bool is_closer(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U'’': case U'”': case U')': case U']': case U'}': case U'»':
            return true;
        default:
            return false;
    }
}

bool is_opener(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U'‘': case U'“': case U'(': case U'[': case U'{': case U'«':
            return true;
        default:
            return false;
    }
}

// Length of a citation marker starting at text[i] == '[', or 0.
std::size_t citation_length(std::u32string_view text, std::size_t i) {
    const auto n = text.size();
    std::size_t j = i + 1;
    auto skip_spaces = [&] {
        while (j < n && is_ascii_space(text[j])) ++j;
    };
    auto read_number = [&] {
        const auto start = j;
        while (j < n && is_digit(text[j])) ++j;
        return j > start;
    };
    skip_spaces();
    if (!read_number()) return 0;
    for (;;) {
        skip_spaces();
        if (j < n && text[j] == U']') return j + 1 - i;
        if (j < n && is_citation_separator(text[j])) {
            ++j;
            skip_spaces();
            if (!read_number()) return 0;
            continue;
        }
        return 0;
    }
}

}  // namespace

std::u32string strip_citations(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == U'[') {
            if (const auto len = citation_length(text, i); len > 0) {
                i += len;
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

std::string strip_citations(std::string_view text) {
    return unicode::encode(strip_citations(unicode::decode(text)));
}

Tokenizer::Tokenizer() : Tokenizer(Lexicons::builtin().abbreviations) {}

Tokenizer::Tokenizer(std::vector<std::string> abbreviations) {
    abbreviations_.reserve(abbreviations.size());
    for (const auto& a : abbreviations) {
        auto lowered = unicode::decode(unicode::to_lower(a));
        if (lowered.empty()) continue;
        if (lowered.back() != U'.') lowered.push_back(U'.');
        abbreviations_.push_back(std::move(lowered));
    }
}

TokenizedText Tokenizer::operator()(std::string_view raw, CaseMode mode) const {
    const std::u32string text = strip_citations(unicode::nfc(unicode::decode(raw)));
    const auto n = text.size();

    TokenizedText out;
    std::vector<std::string> sentence;
    auto close_sentence = [&] {
        if (!sentence.empty()) {
            out.sentences.push_back(std::move(sentence));
            sentence.clear();
        }
    };

    auto ends_with_abbreviation = [&](std::size_t dot) {
        for (const auto& abbr : abbreviations_) {
            const auto len = abbr.size();
            if (dot + 1 < len) continue;
            const auto start = dot + 1 - len;
            bool match = true;
            for (std::size_t k = 0; k < len && match; ++k) {
                match = unicode::to_lower(text[start + k]) == abbr[k];
            }
            if (match && (start == 0 || !unicode::is_alnum(text[start - 1]))) return true;
        }
        return false;
    };

    auto is_boundary = [&](std::size_t i) {
        // i is the last terminator of a run.
        std::size_t k = i + 1;
        while (k < n && is_closer(text[k])) ++k;
        std::size_t m = k;
        while (m < n && unicode::is_space(text[m])) ++m;
        bool boundary = false;
        if (m == n) {
            boundary = true;
        } else if (m > k) {
            boundary = unicode::is_upper(text[m]) ||
                       (is_opener(text[m]) && m + 1 < n && unicode::is_upper(text[m + 1]));
        }
        if (boundary && text[i] == U'.' && ends_with_abbreviation(i)) boundary = false;
        return boundary ? k : std::size_t{0};
    };

    std::size_t break_at = 0;  // 0 = no pending boundary
    std::size_t i = 0;
    while (i < n) {
        if (break_at != 0 && i >= break_at) {
            close_sentence();
            break_at = 0;
        }
        const char32_t cp = text[i];
        if (unicode::is_alnum(cp)) {
            std::size_t j = i + 1;
            while (j < n) {
                if (unicode::is_alnum(text[j]) || unicode::is_mark(text[j])) {
                    ++j;
                } else if (is_internal_joiner(text[j]) && j + 1 < n && unicode::is_alnum(text[j + 1])) {
                    j += 2;
                } else {
                    break;
                }
            }
            std::u32string_view word(text.data() + i, j - i);
            std::string token;
            if (mode == CaseMode::Lower) {
                std::u32string lowered;
                lowered.reserve(word.size());
                for (char32_t c : word) lowered.push_back(unicode::to_lower(c));
                token = unicode::encode(lowered);
            } else {
                token = unicode::encode(word);
            }
            out.tokens.push_back(token);
            out.words.push_back(token);
            sentence.push_back(std::move(token));
            i = j;
            continue;
        }
        if (unicode::is_punct(cp)) {
            auto token = unicode::encode(cp);
            out.tokens.push_back(token);
            out.punct.push_back(token);
            sentence.push_back(std::move(token));
            if (is_terminator(cp) && !(i + 1 < n && is_terminator(text[i + 1]))) {
                if (const auto k = is_boundary(i); k != 0) break_at = k;
            }
        }
        ++i;
    }
    close_sentence();
    return out;
}

TokenizedText tokenize(std::string_view text, CaseMode mode) {
    static const Tokenizer tokenizer;
    return tokenizer(text, mode);
}

// --- lemmatizer -------------------------------------------------------------

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Porter-style consonant test: 'y' is a consonant unless preceded by one.
bool is_consonant(std::string_view w, std::size_t i) {
    if (is_vowel(w[i])) return false;
    if (w[i] == 'y') return i == 0 || !is_consonant(w, i - 1);
    return true;
}

bool has_vowel(std::string_view w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!is_consonant(w, i)) return true;
    }
    return false;
}

std::size_t measure(std::string_view w) {
    std::size_t m = 0;
    std::size_t i = 0;
    while (i < w.size() && is_consonant(w, i)) ++i;
    while (i < w.size()) {
        while (i < w.size() && !is_consonant(w, i)) ++i;
        if (i == w.size()) break;
        while (i < w.size() && is_consonant(w, i)) ++i;
        ++m;
    }
    return m;
}

bool ends_cvc(std::string_view w) {
    const auto n = w.size();
    if (n < 3) return false;
    if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
    const char last = w[n - 1];
    return last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

bool is_plain_ascii_word(std::string_view w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || c == '-' || c == '\'';
    });
}

// Repairs a stem left after removing -ing/-ed.
std::string restore_stem(std::string stem) {
    const auto n = stem.size();
    if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
    if (n >= 2 && stem[n - 1] == stem[n - 2] && is_consonant(stem, n - 1) && stem[n - 1] != 'l' &&
        stem[n - 1] != 's' && stem[n - 1] != 'z') {
        stem.pop_back();
        return stem;
    }
    const char last = stem[n - 1];
    if (last == 'v' || last == 'c') return stem + "e";
    if ((last == 's' || last == 'z') && n >= 2 && is_vowel(stem[n - 2])) return stem + "e";
    if ((ends_with(stem, "rg") || ends_with(stem, "dg"))) return stem + "e";
    if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
    return stem;
}

}  // namespace

Lemmatizer::Lemmatizer() : Lemmatizer(Lexicons::builtin().lemma_exceptions) {}

Lemmatizer::Lemmatizer(std::unordered_map<std::string, std::string> exceptions)
    : exceptions_(std::move(exceptions)) {}

std::string Lemmatizer::apply_rules(std::string_view w) const {
    if (auto it = exceptions_.find(std::string(w)); it != exceptions_.end()) return it->second;
    if (!is_plain_ascii_word(w) || w.size() <= 3) return std::string(w);

    const auto n = w.size();
    if (ends_with(w, "'s")) return std::string(w.substr(0, n - 2));
    if (ends_with(w, "sses")) return std::string(w.substr(0, n - 2));
    if (ends_with(w, "ies") && n > 4) return std::string(w.substr(0, n - 3)) + "y";
    if (ends_with(w, "ied") && n > 4) return std::string(w.substr(0, n - 3)) + "y";
    if (n > 4 && (ends_with(w, "xes") || ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "zzes"))) {
        return std::string(w.substr(0, n - 2));
    }
    if (ends_with(w, "s")) {
        if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is") || ends_with(w, "'s")) {
            return std::string(w);
        }
        return std::string(w.substr(0, n - 1));
    }
    if (ends_with(w, "ing")) {
        auto stem = std::string(w.substr(0, n - 3));
        if (stem.size() >= 2 && has_vowel(stem)) return restore_stem(std::move(stem));
        return std::string(w);
    }
    if (ends_with(w, "ed")) {
        if (ends_with(w, "eed")) return std::string(w);
        auto stem = std::string(w.substr(0, n - 2));
        if (stem.size() >= 2 && has_vowel(stem)) return restore_stem(std::move(stem));
        return std::string(w);
    }
    return std::string(w);
}

std::string Lemmatizer::operator()(std::string_view word) const {
    auto lemma = apply_rules(word);
    if (lemma == word) return lemma;
    if (apply_rules(lemma) != lemma) return std::string(word);
    return lemma;
}

std::vector<std::string> Lemmatizer::operator()(std::span<const std::string> words) const {
    std::vector<std::string> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back((*this)(w));
    return out;
}

std::vector<std::string> lemmatize(std::span<const std::string> words) {
    static const Lemmatizer lemmatizer;
    return lemmatizer(words);
}

std::vector<std::string> clean(const TokenizedText& t, const Lemmatizer& lemmatizer) {
    std::vector<std::string> out;
    out.reserve(t.words.size());
    for (const auto& w : t.words) out.push_back(lemmatizer(unicode::to_lower(w)));
    return out;
}

// --- vocabulary -------------------------------------------------------------

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> documents, std::size_t size_cap) {
    if (size_cap < 3) throw std::invalid_argument("vocabulary size_cap must be at least 3");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : documents) {
        for (const auto& w : doc) ++counts[w];
    }
    if (counts.empty()) throw EmptyTrainingSet("no words in vocabulary training documents");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t keep = std::min(ranked.size(), size_cap - kReserved);

    Vocabulary v;
    v.size_cap_ = size_cap;
    v.index_to_word_ = {"<pad>", "<oov>"};
    for (std::size_t i = 0; i < keep; ++i) {
        v.word_to_index_.emplace(ranked[i].first, static_cast<std::int32_t>(i + kReserved));
        v.index_to_word_.push_back(ranked[i].first);
    }
    return v;
}

std::int32_t Vocabulary::index_of(std::string_view word) const {
    auto it = word_to_index_.find(word);
    return it == word_to_index_.end() ? kOov : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return word_to_index_.find(word) != word_to_index_.end(); }

std::optional<std::string> Vocabulary::word_at(std::int32_t index) const {
    if (index < static_cast<std::int32_t>(kReserved) || static_cast<std::size_t>(index) >= index_to_word_.size()) {
        return std::nullopt;
    }
    return index_to_word_[static_cast<std::size_t>(index)];
}

nlohmann::json Vocabulary::to_json() const {
    nlohmann::json words = nlohmann::json::object();
    for (const auto& [w, i] : word_to_index_) words[w] = i;
    nlohmann::json j;
    j["version"] = kFormatVersion;
    // Unlimited caps serialize as null.
    j["size_cap"] = size_cap_ == kUnlimited ? nlohmann::json(nullptr) : nlohmann::json(size_cap_);
    j["word_to_index"] = std::move(words);
    return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    if (j.value("version", 0) != kFormatVersion) {
        throw VersionMismatch("unsupported vocabulary version");
    }
    Vocabulary v;
    v.size_cap_ = j.at("size_cap").is_null() ? kUnlimited : j.at("size_cap").get<std::size_t>();
    const auto& words = j.at("word_to_index");
    v.index_to_word_.assign(words.size() + kReserved, std::string{});
    v.index_to_word_[0] = "<pad>";
    v.index_to_word_[1] = "<oov>";
    for (auto it = words.begin(); it != words.end(); ++it) {
        const auto idx = it.value().get<std::int32_t>();
        if (idx < static_cast<std::int32_t>(kReserved) || static_cast<std::size_t>(idx) >= v.index_to_word_.size() ||
            !v.index_to_word_[static_cast<std::size_t>(idx)].empty()) {
            throw std::invalid_argument("vocabulary indices are not dense");
        }
        v.index_to_word_[static_cast<std::size_t>(idx)] = it.key();
        v.word_to_index_.emplace(it.key(), idx);
    }
    return v;
}

EncodedSequence encode_and_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                               std::size_t max_seq_len, Truncation truncation) {
    if (max_seq_len < 1) throw std::invalid_argument("max_seq_len must be at least 1");
    EncodedSequence seq;
    seq.true_length = std::min(tokens.size(), max_seq_len);
    seq.indices.assign(max_seq_len, Vocabulary::kPad);
    const std::size_t offset = truncation == Truncation::KeepHead ? 0 : tokens.size() - seq.true_length;
    for (std::size_t i = 0; i < seq.true_length; ++i) {
        seq.indices[i] = vocab.index_of(tokens[offset + i]);
    }
    return seq;
}

std::vector<std::string> decode(const EncodedSequence& seq, const Vocabulary& vocab) {
    std::vector<std::string> out;
    out.reserve(seq.true_length);
    for (std::size_t i = 0; i < seq.true_length && i < seq.indices.size(); ++i) {
        auto w = vocab.word_at(seq.indices[i]);
        out.push_back(w ? *w : std::string("<oov>"));
    }
    return out;
}

}  // namespace aicatcher
