#include "aicatcher/lingfeat.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "unicode.hpp"

namespace aicatcher {

const std::array<std::string_view, FeatureVector::kSize> FeatureVector::kNames{
    "avg_sentence_len", "avg_word_len",      "unique_word_ratio", "grammar_error_count", "discourse_marker_count",
    "noun_ratio",       "pronoun_ratio",     "verb_ratio",        "adverb_ratio",        "adjective_ratio",
    "punctuation_ratio", "stopword_ratio",   "sentiment_word_ratio"};

std::array<double, FeatureVector::kSize> FeatureVector::values() const {
    return {avg_sentence_len,
            avg_word_len,
            unique_word_ratio,
            static_cast<double>(grammar_error_count),
            static_cast<double>(discourse_marker_count),
            noun_ratio,
            pronoun_ratio,
            verb_ratio,
            adverb_ratio,
            adjective_ratio,
            punctuation_ratio,
            stopword_ratio,
            sentiment_word_ratio};
}

FeatureVector FeatureVector::from_values(std::span<const double, kSize> v) {
    auto count = [](double x) { return x <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::llround(x)); };
    FeatureVector f;
    f.avg_sentence_len = v[0];
    f.avg_word_len = v[1];
    f.unique_word_ratio = v[2];
    f.grammar_error_count = count(v[3]);
    f.discourse_marker_count = count(v[4]);
    f.noun_ratio = v[5];
    f.pronoun_ratio = v[6];
    f.verb_ratio = v[7];
    f.adverb_ratio = v[8];
    f.adjective_ratio = v[9];
    f.punctuation_ratio = v[10];
    f.stopword_ratio = v[11];
    f.sentiment_word_ratio = v[12];
    return f;
}

nlohmann::json FeatureVector::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    const auto v = values();
    for (std::size_t i = 0; i < kSize; ++i) {
        if (i == 3 || i == 4) {
            j[std::string(kNames[i])] = static_cast<std::size_t>(v[i]);
        } else {
            j[std::string(kNames[i])] = v[i];
        }
    }
    j["grammar_backend"] = to_string(grammar_source);
    return j;
}

// --- POS tagging ------------------------------------------------------------

namespace {

bool ends_with(std::string_view w, std::string_view s) {
    return w.size() > s.size() + 1 && w.substr(w.size() - s.size()) == s;
}

bool is_number(std::string_view w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '-' || c == '\'';
    }) && w.front() >= '0' && w.front() <= '9';
}

}  // namespace

PosTagger::PosTagger() : PosTagger(Lexicons::builtin().pos_lexicon, Lexicons::builtin().pronouns) {}

PosTagger::PosTagger(std::unordered_map<std::string, PosTag> lexicon, std::unordered_set<std::string> pronouns)
    : lexicon_(std::move(lexicon)), pronouns_(std::move(pronouns)) {}

PosTag PosTagger::tag(std::string_view w) const {
    const std::string key(w);
    if (pronouns_.count(key)) return PosTag::Pronoun;
    if (auto it = lexicon_.find(key); it != lexicon_.end()) return it->second;
    if (is_number(w)) return PosTag::Other;
    if (ends_with(w, "ly")) return PosTag::Adverb;
    for (auto s : {"tion", "sion", "ness", "ment", "ity", "ism", "ance", "ence", "ship"}) {
        if (ends_with(w, s)) return PosTag::Noun;
    }
    for (auto s : {"ize", "ise", "ify"}) {
        if (ends_with(w, s)) return PosTag::Verb;
    }
    for (auto s : {"ous", "ive", "al", "able", "ible", "ful", "less", "ic"}) {
        if (ends_with(w, s)) return PosTag::Adjective;
    }
    return PosTag::Other;
}

// --- individual features ----------------------------------------------------

double avg_sentence_length(const TokenizedText& t) {
    if (t.sentences.empty()) return 0.0;
    return static_cast<double>(t.word_count()) / static_cast<double>(t.sentence_count());
}

double avg_word_length(const TokenizedText& t) {
    if (t.words.empty()) return 0.0;
    std::size_t chars = 0;
    for (const auto& w : t.words) chars += unicode::codepoint_count(w);
    return static_cast<double>(chars) / static_cast<double>(t.words.size());
}

double unique_word_ratio(const TokenizedText& t) {
    if (t.words.empty()) return 0.0;
    std::unordered_set<std::string> distinct;
    for (const auto& w : t.words) distinct.insert(unicode::to_lower(w));
    return static_cast<double>(distinct.size()) / static_cast<double>(t.words.size());
}

std::size_t discourse_marker_count(const TokenizedText& t, std::span<const std::vector<std::string>> markers) {
    std::size_t longest = 0;
    for (const auto& m : markers) longest = std::max(longest, m.size());
    std::vector<std::string> tokens;
    tokens.reserve(t.tokens.size());
    for (const auto& tok : t.tokens) tokens.push_back(unicode::to_lower(tok));

    std::size_t count = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t matched = 0;
        for (const auto& m : markers) {
            if (m.size() <= matched || i + m.size() > tokens.size()) continue;
            if (std::equal(m.begin(), m.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) matched = m.size();
        }
        if (matched > 0) {
            ++count;
            i += matched;
        } else {
            ++i;
        }
    }
    return count;
}

PosRatios pos_ratios(const TokenizedText& t, const PosTagger& tagger) {
    PosRatios r;
    if (t.words.empty()) return r;
    std::array<std::size_t, 6> counts{};
    for (const auto& w : t.words) ++counts[static_cast<std::size_t>(tagger.tag(unicode::to_lower(w)))];
    const double n = static_cast<double>(t.words.size());
    r.noun = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Noun)]) / n;
    r.pronoun = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Pronoun)]) / n;
    r.verb = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Verb)]) / n;
    r.adverb = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Adverb)]) / n;
    r.adjective = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Adjective)]) / n;
    r.other = static_cast<double>(counts[static_cast<std::size_t>(PosTag::Other)]) / n;
    return r;
}

double punctuation_ratio(const TokenizedText& t) {
    if (t.words.empty()) return 0.0;
    return static_cast<double>(t.punct.size()) / static_cast<double>(t.words.size());
}

double stopword_ratio(const TokenizedText& t, const std::unordered_set<std::string>& stopwords) {
    if (t.words.empty()) return 0.0;
    const auto hits = std::count_if(t.words.begin(), t.words.end(),
                                    [&](const std::string& w) { return stopwords.count(unicode::to_lower(w)) > 0; });
    return static_cast<double>(hits) / static_cast<double>(t.words.size());
}

double sentiment_word_ratio(const TokenizedText& t, const std::unordered_map<std::string, double>& polarity) {
    if (t.words.empty()) return 0.0;
    const auto hits = std::count_if(t.words.begin(), t.words.end(), [&](const std::string& w) {
        auto it = polarity.find(unicode::to_lower(w));
        return it != polarity.end() && it->second != 0.0;
    });
    return static_cast<double>(hits) / static_cast<double>(t.words.size());
}

GrammarResult grammar_error_count(std::string_view raw_text, const GrammarChecker& checker) {
    return checker.check(raw_text);
}

// --- extractor --------------------------------------------------------------

namespace {
std::shared_ptr<const Lexicons> builtin_lexicons() {
    return std::shared_ptr<const Lexicons>(&Lexicons::builtin(), [](const Lexicons*) {});
}
}  // namespace

FeatureExtractor::FeatureExtractor() : FeatureExtractor(builtin_lexicons(), GrammarChecker::heuristic()) {}

FeatureExtractor::FeatureExtractor(std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const GrammarChecker> grammar)
    : lexicons_(std::move(lexicons)),
      grammar_(std::move(grammar)),
      tokenizer_(lexicons_->abbreviations),
      tagger_(lexicons_->pos_lexicon, lexicons_->pronouns) {
    if (!grammar_) throw std::invalid_argument("feature extractor needs a grammar checker");
}

FeatureVector FeatureExtractor::extract(std::string_view raw_text) const {
    return extract(raw_text, tokenizer_(raw_text, CaseMode::Lower));
}

FeatureVector FeatureExtractor::extract(std::string_view raw_text, const TokenizedText& t) const {
    FeatureVector f;
    f.avg_sentence_len = avg_sentence_length(t);
    f.avg_word_len = avg_word_length(t);
    f.unique_word_ratio = unique_word_ratio(t);
    const auto grammar = grammar_error_count(raw_text, *grammar_);
    f.grammar_error_count = grammar.errors;
    f.grammar_source = grammar.source;
    f.discourse_marker_count = discourse_marker_count(t, lexicons_->discourse_markers);
    const auto pos = pos_ratios(t, tagger_);
    f.noun_ratio = pos.noun;
    f.pronoun_ratio = pos.pronoun;
    f.verb_ratio = pos.verb;
    f.adverb_ratio = pos.adverb;
    f.adjective_ratio = pos.adjective;
    f.punctuation_ratio = punctuation_ratio(t);
    f.stopword_ratio = stopword_ratio(t, lexicons_->stopwords);
    f.sentiment_word_ratio = sentiment_word_ratio(t, lexicons_->polarity);
    return f;
}

// --- scaler -----------------------------------------------------------------

FeatureScaler::FeatureScaler() {
    means_.fill(0.0);
    stddevs_.fill(1.0);
}

FeatureScaler::FeatureScaler(const Array& means, const Array& stddevs) : means_(means), stddevs_(stddevs) {
    for (auto s : stddevs_) {
        if (!(s > 0.0)) throw std::invalid_argument("scaler standard deviations must be positive");
    }
}

FeatureScaler FeatureScaler::fit(std::span<const Array> train) {
    if (train.size() < 2) throw TooFewSamples("fitting a scaler needs at least two vectors");
    Array mean{};
    Array sd{};
    const double n = static_cast<double>(train.size());
    for (std::size_t d = 0; d < FeatureVector::kSize; ++d) {
        double sum = 0.0;
        for (const auto& x : train) sum += x[d];
        mean[d] = sum / n;
        double ss = 0.0;
        for (const auto& x : train) ss += (x[d] - mean[d]) * (x[d] - mean[d]);
        const double s = std::sqrt(ss / n);
        sd[d] = s > 1e-12 ? s : 1.0;
    }
    return FeatureScaler(mean, sd);
}

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> train) {
    std::vector<Array> rows;
    rows.reserve(train.size());
    for (const auto& f : train) rows.push_back(f.values());
    return fit(std::span<const Array>(rows));
}

FeatureScaler::Array FeatureScaler::apply(const Array& x) const {
    Array z{};
    for (std::size_t d = 0; d < FeatureVector::kSize; ++d) z[d] = (x[d] - means_[d]) / stddevs_[d];
    return z;
}

FeatureScaler::Array FeatureScaler::invert(const Array& z) const {
    Array x{};
    for (std::size_t d = 0; d < FeatureVector::kSize; ++d) x[d] = z[d] * stddevs_[d] + means_[d];
    return x;
}

nlohmann::json FeatureScaler::to_json() const {
    return {{"means", means_}, {"stddevs", stddevs_}};
}

FeatureScaler FeatureScaler::from_json(const nlohmann::json& j) {
    return FeatureScaler(j.at("means").get<Array>(), j.at("stddevs").get<Array>());
}

}  // namespace aicatcher
