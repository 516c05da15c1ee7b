#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace aicatcher {

enum class PosTag { Noun, Pronoun, Verb, Adverb, Adjective, Other };

std::string_view to_string(PosTag tag);

// All word lists and lookup tables used by text preparation and feature
// extraction. The built-in set is compiled into the library from core/data;
// a directory of same-named files can replace any subset of them.
//
// File formats (UTF-8, one entry per line, '#' starts a comment line):
//   stopwords.txt            word
//   discourse_markers.txt    marker, possibly several space-separated words
//   abbreviations.txt        abbreviation including its trailing period
//   pronouns.txt             word
//   lemma_exceptions.tsv     surface<TAB>lemma
//   pos_lexicon.tsv          word<TAB>NOUN|PRON|VERB|ADV|ADJ|OTHER
//   polarity.tsv             word<TAB>score
//   agreement_patterns.tsv   subject<TAB>verb
struct Lexicons {
    std::unordered_set<std::string> stopwords;
    std::vector<std::vector<std::string>> discourse_markers;
    std::vector<std::string> abbreviations;
    std::unordered_set<std::string> pronouns;
    std::unordered_map<std::string, std::string> lemma_exceptions;
    std::unordered_map<std::string, PosTag> pos_lexicon;
    std::unordered_map<std::string, double> polarity;
    std::unordered_set<std::string> agreement_patterns;  // "subject verb"

    static const Lexicons& builtin();

    // Starts from the built-in set and replaces every table whose file is
    // present in `dir`. Throws IOFailure when `dir` is not a directory.
    static Lexicons load(const std::filesystem::path& dir);
};

namespace lexicon_io {

std::unordered_set<std::string> parse_word_set(std::string_view text);
std::vector<std::string> parse_lines(std::string_view text);
std::vector<std::vector<std::string>> parse_phrases(std::string_view text);
std::unordered_map<std::string, std::string> parse_string_pairs(std::string_view text);
std::unordered_map<std::string, PosTag> parse_pos_lexicon(std::string_view text);
std::unordered_map<std::string, double> parse_polarity(std::string_view text);

}  // namespace lexicon_io

}  // namespace aicatcher
