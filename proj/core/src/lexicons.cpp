#include "aicatcher/lexicons.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "aicatcher/errors.hpp"

namespace aicatcher {

namespace detail {
std::string_view embedded_resource(std::string_view name);
}

std::string_view to_string(PosTag tag) {
    switch (tag) {
        case PosTag::Noun: return "NOUN";
        case PosTag::Pronoun: return "PRON";
        case PosTag::Verb: return "VERB";
        case PosTag::Adverb: return "ADV";
        case PosTag::Adjective: return "ADJ";
        case PosTag::Other: return "OTHER";
    }
    return "OTHER";
}

namespace lexicon_io {
namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <typename Fn>
void for_each_entry(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(pos, end - pos));
        if (!line.empty() && line.front() != '#') fn(line);
        pos = end + 1;
    }
}

std::pair<std::string_view, std::string_view> split_tab(std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) return {line, {}};
    return {trim(line.substr(0, tab)), trim(line.substr(tab + 1))};
}

PosTag parse_tag(std::string_view s) {
    if (s == "NOUN") return PosTag::Noun;
    if (s == "PRON") return PosTag::Pronoun;
    if (s == "VERB") return PosTag::Verb;
    if (s == "ADV") return PosTag::Adverb;
    if (s == "ADJ") return PosTag::Adjective;
    return PosTag::Other;
}

}  // namespace

std::unordered_set<std::string> parse_word_set(std::string_view text) {
    std::unordered_set<std::string> out;
    for_each_entry(text, [&](std::string_view line) { out.emplace(line); });
    return out;
}

std::vector<std::string> parse_lines(std::string_view text) {
    std::vector<std::string> out;
    for_each_entry(text, [&](std::string_view line) { out.emplace_back(line); });
    return out;
}

std::vector<std::vector<std::string>> parse_phrases(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    for_each_entry(text, [&](std::string_view line) {
        std::istringstream in{std::string(line)};
        std::vector<std::string> words;
        for (std::string w; in >> w;) words.push_back(std::move(w));
        if (!words.empty()) out.push_back(std::move(words));
    });
    return out;
}

std::unordered_map<std::string, std::string> parse_string_pairs(std::string_view text) {
    std::unordered_map<std::string, std::string> out;
    for_each_entry(text, [&](std::string_view line) {
        auto [k, v] = split_tab(line);
        if (!k.empty() && !v.empty()) out.emplace(std::string(k), std::string(v));
    });
    return out;
}

std::unordered_map<std::string, PosTag> parse_pos_lexicon(std::string_view text) {
    std::unordered_map<std::string, PosTag> out;
    out.reserve(100000);
    for_each_entry(text, [&](std::string_view line) {
        auto [k, v] = split_tab(line);
        if (!k.empty()) out.emplace(std::string(k), parse_tag(v));
    });
    return out;
}

std::unordered_map<std::string, double> parse_polarity(std::string_view text) {
    std::unordered_map<std::string, double> out;
    for_each_entry(text, [&](std::string_view line) {
        auto [k, v] = split_tab(line);
        if (k.empty() || v.empty()) return;
        // strtod instead of from_chars: libstdc++ 11 lacks floating from_chars on some targets.
        std::string buf(v);
        char* end = nullptr;
        const double score = std::strtod(buf.c_str(), &end);
        if (end != buf.c_str()) out.emplace(std::string(k), score);
    });
    return out;
}

}  // namespace lexicon_io

namespace {

Lexicons assemble(const std::function<std::optional<std::string>(std::string_view)>& source,
                  const Lexicons* base) {
    Lexicons lex = base ? *base : Lexicons{};
    using namespace lexicon_io;
    if (auto t = source("stopwords.txt")) lex.stopwords = parse_word_set(*t);
    if (auto t = source("discourse_markers.txt")) lex.discourse_markers = parse_phrases(*t);
    if (auto t = source("abbreviations.txt")) lex.abbreviations = parse_lines(*t);
    if (auto t = source("pronouns.txt")) lex.pronouns = parse_word_set(*t);
    if (auto t = source("lemma_exceptions.tsv")) lex.lemma_exceptions = parse_string_pairs(*t);
    if (auto t = source("pos_lexicon.tsv")) lex.pos_lexicon = parse_pos_lexicon(*t);
    if (auto t = source("polarity.tsv")) lex.polarity = parse_polarity(*t);
    if (auto t = source("agreement_patterns.tsv")) {
        lex.agreement_patterns.clear();
        for (const auto& line : parse_lines(*t)) {
            auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            lex.agreement_patterns.insert(line.substr(0, tab) + " " + line.substr(tab + 1));
        }
    }
    return lex;
}

}  // namespace

const Lexicons& Lexicons::builtin() {
    static const Lexicons instance = assemble(
        [](std::string_view name) -> std::optional<std::string> {
            auto data = detail::embedded_resource(name);
            if (data.empty()) return std::nullopt;
            return std::string(data);
        },
        nullptr);
    return instance;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IOFailure("lexicon directory not found: " + dir.string());
    }
    return assemble(
        [&](std::string_view name) -> std::optional<std::string> {
            const auto path = dir / std::string(name);
            if (!std::filesystem::exists(path)) return std::nullopt;
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IOFailure("cannot read " + path.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        },
        &builtin());
}

}  // namespace aicatcher
