#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "aicatcher/corpus.hpp"
#include "aicatcher/errors.hpp"
#include "aicatcher/textprep.hpp"
#include "oracles.hpp"
#include "synthetic_corpus.hpp"

using namespace aicatcher;
using namespace aicatcher::testing;

namespace {

std::vector<Document> labeled(std::initializer_list<Label> labels) {
    std::vector<Document> docs;
    for (auto l : labels) docs.push_back({std::to_string(docs.size()), "text " + std::to_string(docs.size()), l, ""});
    return docs;
}

std::vector<Document> binary(std::size_t human, std::size_t chatgpt) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < human + chatgpt; ++i) {
        docs.push_back({std::to_string(i), "w", i < human ? Label::Human : Label::ChatGPT, ""});
    }
    return docs;
}

void check_partition(const std::vector<Split>& splits, std::size_t n) {
    std::vector<int> seen(n, 0);
    for (const auto& s : splits) {
        CHECK(std::is_sorted(s.test.begin(), s.test.end()));
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
        CHECK(s.test.size() + s.train.size() == n);
        std::set<std::size_t> train(s.train.begin(), s.train.end());
        for (auto i : s.test) {
            ++seen[i];
            CHECK(train.count(i) == 0);
        }
    }
    for (auto c : seen) CHECK(c == 1);
}

}  // namespace

TEST_CASE("load_corpus jsonl maps fields") {
    const auto docs = parse_jsonl(R"({"text":"The cat sat.","label":"Human","topic":"NLP"})");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].text == "The cat sat.");
    CHECK(docs[0].label == Label::Human);
    CHECK(docs[0].topic == "NLP");
    CHECK(docs[0].id == "0");
}

TEST_CASE("unknown label is rejected with its value") {
    try {
        parse_jsonl(R"({"text":"x","label":"robot"})");
        FAIL("expected UnknownLabel");
    } catch (const UnknownLabel& e) {
        CHECK(e.value() == "robot");
    }
}

TEST_CASE("three labels, case-insensitive") {
    const auto docs = parse_jsonl("{\"text\":\"a\",\"label\":\"human\"}\n"
                                  "{\"text\":\"b\",\"label\":\"CHATGPT\"}\n"
                                  "{\"text\":\"c\",\"label\":\"Mixed\",\"id\":\"m1\"}\n");
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].label == Label::Human);
    CHECK(docs[1].label == Label::ChatGPT);
    CHECK(docs[2].label == Label::Mixed);
    CHECK(docs[2].id == "m1");
}

TEST_CASE("missing text or label gives MalformedRecord with the line") {
    try {
        parse_jsonl("{\"text\":\"a\",\"label\":\"human\"}\n{\"label\":\"human\"}\n");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_jsonl("{\"text\":\"a\"}"), MalformedRecord);
    CHECK_THROWS_AS(parse_jsonl("not json"), MalformedRecord);
    CHECK_THROWS_AS(parse_csv("id,text\n1,hello\n"), MalformedRecord);
}

TEST_CASE("csv with quoted commas, quotes and newlines") {
    const auto docs = parse_csv("id,text,label,topic\n"
                                "a,\"One, two\",human,Bio\n"
                                "b,\"She said \"\"hi\"\"\nthen left.\",ChatGPT,\n");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].text == "One, two");
    CHECK(docs[1].text == "She said \"hi\"\nthen left.");
    CHECK(docs[1].label == Label::ChatGPT);
    CHECK(docs[1].topic.empty());
}

TEST_CASE("jsonl save and load round trip") {
    TempDir dir;
    const auto docs = synthetic_corpus({.per_class = 5, .mixed = 2});
    save_jsonl(docs, dir / "c.jsonl");
    CHECK(load_corpus(dir / "c.jsonl") == docs);
    CHECK(load_corpus(dir / "c.jsonl", CorpusFormat::Jsonl) == docs);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IOFailure);
}

TEST_CASE("filter_binary") {
    const auto docs = labeled({Label::Human, Label::Mixed, Label::ChatGPT});
    const auto out = filter_binary(docs);
    REQUIRE(out.size() == 2);
    CHECK(out[0].label == Label::Human);
    CHECK(out[1].label == Label::ChatGPT);
    CHECK(filter_binary(labeled({Label::Mixed, Label::Mixed})).empty());

    std::vector<Document> big;
    for (int i = 0; i < 3000; ++i) big.push_back({std::to_string(i), "t", static_cast<Label>(i % 3), ""});
    const auto kept = filter_binary(big);
    CHECK(kept.size() == 2000);
    for (std::size_t i = 1; i < kept.size(); ++i) CHECK(std::stoi(kept[i - 1].id) < std::stoi(kept[i].id));
    for (const auto& d : kept) CHECK(d.label != Label::Mixed);
}

TEST_CASE("compute_stats examples") {
    std::vector<Document> two{{"a", "one two three", Label::Human, "x"},
                              {"b", "one two three four five", Label::ChatGPT, "y"}};
    const auto s = compute_stats(two, {});
    CHECK(s.n_total == 2);
    CHECK(s.avg_paragraph_len_words == doctest::Approx(4.0));
    CHECK(s.min_paragraph_len_words == 3);
    CHECK(s.max_paragraph_len_words == 5);

    std::vector<Document> pets{{"a", "the cat", Label::Human, ""}, {"b", "the dog", Label::Human, ""}};
    CHECK(compute_stats(pets, {"the"}).n_unique_words == 2);
    CHECK_THROWS_AS(compute_stats(std::vector<Document>{}), EmptyCorpus);
}

TEST_CASE("compute_stats citations do not count as words") {
    std::vector<Document> docs{{"a", "Prior work [3] agrees [1, 4].", Label::Human, ""}};
    CHECK(compute_stats(docs, {}).avg_paragraph_len_words == doctest::Approx(3.0));
}

TEST_CASE("compute_stats matches brute force") {
    const auto docs = synthetic_corpus({.per_class = 30, .mixed = 10});
    const std::unordered_set<std::string> stop{"the", "of", "and", "a", "we", "in"};
    const auto s = compute_stats(docs, stop);
    double total = 0;
    std::size_t mn = SIZE_MAX, mx = 0;
    std::set<std::string> unique;
    std::map<Label, std::size_t> per_class;
    for (const auto& d : docs) {
        const auto t = tokenize(d.text);
        total += t.word_count();
        mn = std::min(mn, t.word_count());
        mx = std::max(mx, t.word_count());
        for (const auto& w : t.words) {
            if (!stop.count(w)) unique.insert(w);
        }
        ++per_class[d.label];
    }
    CHECK(s.n_total == docs.size());
    CHECK(s.avg_paragraph_len_words == doctest::Approx(total / docs.size()).epsilon(1e-9));
    CHECK(s.min_paragraph_len_words == mn);
    CHECK(s.max_paragraph_len_words == mx);
    CHECK(s.n_unique_words == unique.size());
    CHECK(s.n_per_class == per_class);
    std::size_t sum = 0;
    for (const auto& [l, n] : s.n_per_class) sum += n;
    CHECK(sum == s.n_total);
    CHECK(s.min_paragraph_len_words <= s.avg_paragraph_len_words);
    CHECK(s.avg_paragraph_len_words <= s.max_paragraph_len_words);
}

TEST_CASE("make_splits examples") {
    const auto ten = binary(5, 5);
    const auto folds = make_splits(ten, SplitPlan::kfold(5, 7));
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) CHECK(f.test.size() == 2);
    check_partition(folds, 10);

    const auto holdout = make_splits(binary(200, 200), SplitPlan::holdout(1));
    REQUIRE(holdout.size() == 1);
    CHECK(holdout[0].train.size() == 320);
    CHECK(holdout[0].test.size() == 80);

    const auto docs = binary(1000, 1000);
    const auto h = make_splits(docs, SplitPlan::holdout(3));
    REQUIRE(h[0].test.size() == 400);
    std::size_t human = 0;
    for (auto i : h[0].test) human += docs[i].label == Label::Human;
    CHECK(human >= 199);
    CHECK(human <= 201);
}

TEST_CASE("make_splits errors") {
    CHECK_THROWS_AS(make_splits(binary(2, 2), SplitPlan::kfold(5, 0)), TooFewDocuments);
    CHECK_THROWS_AS(make_splits(binary(2, 2), SplitPlan::holdout(0)), TooFewDocuments);
    CHECK_THROWS(make_splits(binary(5, 5), SplitPlan::kfold(1, 0)));
}

TEST_CASE("make_splits property: partition, balance, stratification, determinism") {
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t h = 3 + rng.below(60);
        const std::size_t c = 3 + rng.below(60);
        const std::size_t k = 2 + rng.below(9);
        if (h + c < k) continue;
        auto docs = binary(h, c);
        rng.shuffle(std::span<Document>(docs));
        const bool strat = trial % 2 == 0;
        const auto plan = SplitPlan::kfold(k, rng.next(), strat);
        const auto splits = make_splits(docs, plan);
        REQUIRE(splits.size() == k);
        check_partition(splits, docs.size());
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& s : splits) {
            lo = std::min(lo, s.test.size());
            hi = std::max(hi, s.test.size());
            if (strat) {
                std::size_t hum = 0;
                for (auto i : s.test) hum += docs[i].label == Label::Human;
                const double expected = static_cast<double>(h) * s.test.size() / docs.size();
                CHECK(std::abs(static_cast<double>(hum) - expected) <= 1.0 + 1e-9);
            }
        }
        CHECK(hi - lo <= 1);
        CHECK(make_splits(docs, plan).size() == splits.size());
        const auto again = make_splits(docs, plan);
        for (std::size_t i = 0; i < k; ++i) CHECK(again[i].test == splits[i].test);
    }
}
