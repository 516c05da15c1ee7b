#include <doctest.h>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "aicatcher/lexicons.hpp"
#include "aicatcher/textprep.hpp"
#include "oracles.hpp"

using namespace aicatcher;
using namespace aicatcher::testing;

using Words = std::vector<std::string>;

TEST_CASE("tokenize two sentences") {
    const auto t = tokenize("The cat sat. The dog ran away.");
    CHECK(t.sentence_count() == 2);
    CHECK(t.words == Words{"the", "cat", "sat", "the", "dog", "ran", "away"});
    CHECK(t.punct == Words{".", "."});
    CHECK(t.sentences[0] == Words{"the", "cat", "sat", "."});
}

TEST_CASE("tokenize empty and whitespace") {
    for (const char* s : {"", "   \n\t "}) {
        const auto t = tokenize(s);
        CHECK(t.sentence_count() == 0);
        CHECK(t.tokens.empty());
    }
}

TEST_CASE("abbreviations do not split sentences") {
    CHECK(tokenize("See Fig. 3 here.").sentence_count() == 1);
    CHECK(tokenize("Smith et al. Found it.").sentence_count() == 1);
    CHECK(tokenize("Use a solvent, e.g. Ethanol.").sentence_count() == 1);
    CHECK(tokenize("It rose. Then it fell.").sentence_count() == 2);
}

TEST_CASE("tokenizer word and punctuation rules") {
    const auto t = tokenize("Don't over-fit: state-of-the-art models (v2) cost $5!", CaseMode::Preserve);
    CHECK(t.words == Words{"Don't", "over-fit", "state-of-the-art", "models", "v2", "cost", "5"});
    CHECK(t.punct == Words{":", "(", ")", "!"});
    CHECK(tokenize("A decimal 3.14 stays whole.").words == Words{"a", "decimal", "3", "14", "stays", "whole"});
}

TEST_CASE("citation markers are stripped before tokenizing") {
    CHECK(strip_citations("as shown [3] and [1, 4] or [2-7] but not [a]") == "as shown  and  or  but not [a]");
    CHECK(tokenize("Prior work [12] agrees.").words == Words{"prior", "work", "agrees"});
}

TEST_CASE("NFC normalization makes composed and decomposed forms equal") {
    CHECK(tokenize("caf\xC3\xA9").words == tokenize("cafe\xCC\x81").words);
    CHECK(tokenize("\xC3\x89t\xC3\xA9 fini.").words == Words{"\xC3\xA9t\xC3\xA9", "fini"});
}

TEST_CASE("golden 20-sentence file") {
    const auto text = read_file(AICATCHER_TEST_DATA_DIR "/golden_sentences.txt");
    const auto t = tokenize(text, CaseMode::Preserve);
    // First word of each sentence, by hand.
    const Words firsts{"Cells",   "Growth", "As", "Smith", "Why", "We",  "The", "Samples", "Results", "The",
                       "See",     "Our",    "We", "It",    "Nobody", "Is", "The", "Dr", "Prof", "In"};
    REQUIRE(t.sentence_count() == 20);
    Words got;
    for (const auto& s : t.sentences) {
        for (const auto& tok : s) {
            if (tok.size() > 1 || std::isalpha(static_cast<unsigned char>(tok[0]))) {
                got.push_back(tok);
                break;
            }
        }
    }
    CHECK(got == firsts);
}

TEST_CASE("tokenizer property: total, bounded, partitioned") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        const auto text = random_unicode_text(rng);
        TokenizedText t;
        CHECK_NOTHROW(t = tokenize(text));
        std::size_t codepoints = 0;
        for (unsigned char c : text) codepoints += (c & 0xC0) != 0x80;
        CHECK(t.tokens.size() <= codepoints);
        Words flat;
        for (const auto& s : t.sentences) flat.insert(flat.end(), s.begin(), s.end());
        CHECK(flat == t.tokens);
        CHECK(t.words.size() + t.punct.size() == t.tokens.size());
        for (const auto& tok : t.tokens) CHECK(!tok.empty());
    }
}

TEST_CASE("lemmatize examples") {
    CHECK(lemmatize(Words{"running", "studies", "ran"}) == Words{"run", "study", "run"});
    CHECK(lemmatize(Words{"cat"}) == Words{"cat"});
    const Lemmatizer lem;
    CHECK(lem("mice") == "mouse");
    CHECK(lem("was") == "be");
    CHECK(lem("are") == "be");
    CHECK(lem("better") == "good");
    CHECK(lem("classes") == "class");
    CHECK(lem("making") == "make");
    CHECK(lem("stopped") == "stop");
    CHECK(lem("analysis") == "analysis");
    CHECK(Lexicons::builtin().lemma_exceptions.size() >= 150);
}

TEST_CASE("lemmatize is idempotent") {
    Rng rng(11);
    const Lemmatizer lem;
    Words pool;
    for (const auto& [w, _] : Lexicons::builtin().pos_lexicon) pool.push_back(w);
    for (const auto& [w, _] : Lexicons::builtin().lemma_exceptions) pool.push_back(w);
    std::sort(pool.begin(), pool.end());
    const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    const Words suffixes{"s", "es", "ies", "ing", "ed", "sses", "ss", "ied", "e", ""};
    for (int i = 0; i < 3000; ++i) {
        std::string w;
        if (i % 2 == 0) {
            w = pool[rng.below(pool.size())];
        } else {
            const auto len = 1 + rng.below(7);
            for (std::size_t k = 0; k < len; ++k) w += letters[rng.below(letters.size())];
        }
        w += suffixes[rng.below(suffixes.size())];
        const auto once = lem(w);
        CHECK_MESSAGE(lem(once) == once, w);
    }
}

TEST_CASE("vocabulary examples") {
    const std::vector<Words> docs{{"cat", "cat", "dog"}, {"cat", "dog", "eel"}};
    const auto v = Vocabulary::build(docs, 4);
    CHECK(v.index_of("cat") == 2);
    CHECK(v.index_of("dog") == 3);
    CHECK(v.index_of("eel") == Vocabulary::kOov);
    CHECK(v.size() == 4);

    const std::vector<Words> tie{{"cat", "ant", "cat", "ant"}};
    const auto t = Vocabulary::build(tie, 3);
    CHECK(t.words().size() == 1);
    CHECK(t.index_of("ant") == 2);

    CHECK(Vocabulary::build(docs, 4) == v);
    CHECK_THROWS_AS(Vocabulary::build(std::vector<Words>{{}, {}}, 10), EmptyTrainingSet);
    CHECK_THROWS_AS(Vocabulary::build(docs, 2), std::invalid_argument);
}

TEST_CASE("vocabulary invariants and json round trip") {
    Rng rng(3);
    std::vector<Words> docs(20);
    for (auto& d : docs) {
        for (int i = 0; i < 30; ++i) d.push_back("w" + std::to_string(rng.below(60)));
    }
    for (std::size_t cap : {3u, 10u, 40u, 1000u}) {
        const auto v = Vocabulary::build(docs, cap);
        CHECK(v.word_count() <= cap - 2);
        std::vector<int> used(v.size(), 0);
        for (const auto& [w, i] : v.words()) {
            REQUIRE(i >= 2);
            REQUIRE(static_cast<std::size_t>(i) < v.size());
            ++used[i];
            CHECK(v.word_at(i) == w);
        }
        for (std::size_t i = 2; i < used.size(); ++i) CHECK(used[i] == 1);
        CHECK(Vocabulary::from_json(v.to_json()) == v);
    }
    const auto full = Vocabulary::build(docs, Vocabulary::kUnlimited);
    for (const auto& d : docs) {
        for (const auto& w : d) CHECK(full.index_of(w) != Vocabulary::kOov);
    }
}

TEST_CASE("encode_and_pad examples") {
    const std::vector<Words> docs{{"cat", "cat", "sat"}};
    const auto v = Vocabulary::build(docs, 10);
    const auto e = encode_and_pad(Words{"cat", "sat", "dog"}, v, 5);
    CHECK(e.indices == std::vector<std::int32_t>{2, 3, 1, 0, 0});
    CHECK(e.true_length == 3);

    const auto empty = encode_and_pad(Words{}, v, 3);
    CHECK(empty.indices == std::vector<std::int32_t>{0, 0, 0});
    CHECK(empty.true_length == 0);

    Words long_text(600, "cat");
    long_text[0] = "sat";
    long_text[599] = "dog";
    const auto head = encode_and_pad(long_text, v, 512);
    CHECK(head.true_length == 512);
    CHECK(head.indices.size() == 512);
    CHECK(std::count(head.indices.begin(), head.indices.end(), 0) == 0);
    CHECK(head.indices.front() == 3);
    const auto tail = encode_and_pad(long_text, v, 512, Truncation::KeepTail);
    CHECK(tail.indices.back() == Vocabulary::kOov);
    CHECK(tail.indices.front() == 2);
}

TEST_CASE("decode inverts encode over in-vocabulary tokens") {
    Rng rng(8);
    const Lemmatizer lem;
    for (int trial = 0; trial < 50; ++trial) {
        Words raw;
        const auto n = rng.below(40);
        for (std::size_t i = 0; i < n; ++i) raw.push_back("tok" + std::to_string(rng.below(25)));
        const auto lemmas = lem(raw);
        const std::vector<Words> docs{lemmas, Words{"x"}};
        const auto v = Vocabulary::build(docs, Vocabulary::kUnlimited);
        const std::size_t max_len = 1 + rng.below(30);
        const auto e = encode_and_pad(lemmas, v, max_len);
        CHECK(e.indices.size() == max_len);
        CHECK(e.true_length == std::min(lemmas.size(), max_len));
        for (std::size_t i = 0; i < max_len; ++i) {
            if (i < e.true_length) CHECK(e.indices[i] != Vocabulary::kPad);
            else CHECK(e.indices[i] == Vocabulary::kPad);
            CHECK(e.indices[i] >= 0);
            CHECK(static_cast<std::size_t>(e.indices[i]) < v.size());
        }
        CHECK(decode(e, v) == Words(lemmas.begin(), lemmas.begin() + e.true_length));
    }
}

TEST_CASE("clean lemmatizes the lowercased words") {
    const auto t = tokenize("The Mice were Running quickly.");
    CHECK(clean(t, Lemmatizer()) == Words{"the", "mouse", "be", "run", "quickly"});
}
