#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <hybridir/metrics.hpp>

#include "oracles.hpp"

using namespace hybridir;

namespace {

RankedRun run_of(std::string qid, std::vector<std::string> docs) {
    RankedRun r;
    r.query_id = std::move(qid);
    std::uint32_t rank = 1;
    double score = static_cast<double>(docs.size());
    for (auto& d : docs) {
        r.hits.push_back({std::move(d), score, rank});
        score -= 1.0;
        ++rank;
    }
    return r;
}

}  // namespace

TEST_CASE("top-k accuracy counts only judgeable queries") {
    RelevanceJudgments qrels;
    qrels.add("q1", "a", 1);
    qrels.add("q2", "b", 1);
    qrels.add("q3", "c", 0);   // judged but never relevant
    qrels.add("q3", "d", -1);  // judged irrelevant

    std::vector<RankedRun> runs = {
        run_of("q1", {"a", "x", "y"}),
        run_of("q2", {"x", "y", "b"}),
        run_of("q3", {"c", "d", "x"}),
    };

    CHECK(top_k_accuracy(runs, qrels, 1) == 0.5);   // q3 excluded, q1 hits
    CHECK(top_k_accuracy(runs, qrels, 2) == 0.5);
    CHECK(top_k_accuracy(runs, qrels, 3) == 1.0);   // q2 found at rank 3
    CHECK_THROWS_AS(top_k_accuracy(runs, qrels, 0), std::invalid_argument);
}

TEST_CASE("raising the threshold changes the denominator") {
    RelevanceJudgments qrels;
    qrels.add("q1", "a", 2);
    qrels.add("q2", "b", 1);  // not judgeable at threshold 2

    std::vector<RankedRun> runs = {
        run_of("q1", {"x", "a"}),
        run_of("q2", {"b"}),
    };

    CHECK(top_k_accuracy(runs, qrels, 1, 1) == 0.5);
    CHECK(top_k_accuracy(runs, qrels, 1, 2) == 0.0);  // only q1 counts, misses at 1
    CHECK(top_k_accuracy(runs, qrels, 2, 2) == 1.0);

    // no judgeable query at all: defined as zero
    CHECK(top_k_accuracy(runs, qrels, 1, 3) == 0.0);
}

TEST_CASE("precision averages relevant fraction over judgeable queries") {
    RelevanceJudgments qrels;
    qrels.add("q1", "a", 1);
    qrels.add("q1", "b", 2);
    qrels.add("q2", "c", 1);
    qrels.add("q3", "z", 0);  // excluded

    std::vector<RankedRun> runs = {
        run_of("q1", {"a", "b", "x", "y"}),
        run_of("q2", {"x", "c", "y", "w"}),
        run_of("q3", {"z"}),
    };

    // q1: 2/2, q2: 1/2 -> mean 0.75
    CHECK(precision_at_k(runs, qrels, 2) == 0.75);
    // q1: 2/4, q2: 1/4 -> mean 0.375; short lists divide by k regardless
    CHECK(precision_at_k(runs, qrels, 4) == 0.375);
    CHECK_THROWS_AS(precision_at_k(runs, qrels, 0), std::invalid_argument);
}

TEST_CASE("ndcg matches a hand-computed value") {
    RelevanceJudgments qrels;
    qrels.add("q1", "a", 2);
    qrels.add("q1", "b", 1);

    std::vector<RankedRun> runs = {run_of("q1", {"b", "x", "a"})};

    const double dcg = 1.0 / std::log2(2.0) + 0.0 + 2.0 / std::log2(4.0);
    const double idcg = 2.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
    CHECK_THAT(ndcg_at_k(runs, qrels, 10), Catch::Matchers::WithinAbs(dcg / idcg, 1e-12));

    // cutoff 1 sees only the grade-1 doc at the top
    const double idcg1 = 2.0;
    CHECK_THAT(ndcg_at_k(runs, qrels, 1), Catch::Matchers::WithinAbs(1.0 / idcg1, 1e-12));

    // a perfect ordering scores exactly 1
    std::vector<RankedRun> perfect = {run_of("q1", {"a", "b"})};
    CHECK_THAT(ndcg_at_k(perfect, qrels, 10), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("ndcg clamps negative grades and can use exponential gains") {
    RelevanceJudgments qrels;
    qrels.add("q1", "good", 2);
    qrels.add("q1", "bad", -1);

    // the judged-irrelevant doc in first place contributes nothing
    std::vector<RankedRun> runs = {run_of("q1", {"bad", "good"})};
    const double linear = (2.0 / std::log2(3.0)) / 2.0;
    CHECK_THAT(ndcg_at_k(runs, qrels, 10), Catch::Matchers::WithinAbs(linear, 1e-12));

    // exponential gain: 2^2 - 1 = 3 for the good doc, still 0 for the bad one
    const double expo = (3.0 / std::log2(3.0)) / 3.0;
    CHECK_THAT(ndcg_at_k(runs, qrels, 10, true), Catch::Matchers::WithinAbs(expo, 1e-12));
}

TEST_CASE("queries with zero ideal dcg are excluded") {
    RelevanceJudgments qrels;
    qrels.add("q1", "a", 1);
    qrels.add("q2", "b", 0);
    qrels.add("q2", "c", -1);

    std::vector<RankedRun> runs = {
        run_of("q1", {"a"}),
        run_of("q2", {"b", "c"}),
    };
    // q2 drops out entirely; q1 is perfect
    CHECK_THAT(ndcg_at_k(runs, qrels, 10), Catch::Matchers::WithinAbs(1.0, 1e-12));

    // nothing judgeable at all: mean over the empty set is zero
    std::vector<RankedRun> only_q2 = {run_of("q2", {"b", "c"})};
    CHECK(ndcg_at_k(only_q2, qrels, 10) == 0.0);
    CHECK_THROWS_AS(ndcg_at_k(runs, qrels, 0), std::invalid_argument);
}

TEST_CASE("ndcg agrees with the permutation oracle on random inputs") {
    std::mt19937 rng(2468);
    std::uniform_int_distribution<int> grade(-1, 2);
    std::uniform_int_distribution<std::size_t> judged_count(1, 5);
    std::uniform_int_distribution<std::size_t> run_len(0, 8);
    const std::vector<std::string> pool = {"d0", "d1", "d2", "d3", "d4", "d5", "d6", "d7"};

    for (int trial = 0; trial < 30; ++trial) {
        RelevanceJudgments qrels;
        std::map<std::string, int> judged;
        auto shuffled = pool;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto jn = judged_count(rng);
        for (std::size_t i = 0; i < jn; ++i) {
            const int g = grade(rng);
            judged[shuffled[i]] = g;
            qrels.add("q", shuffled[i], g);
        }
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::vector<std::string> ranking(shuffled.begin(),
                                         shuffled.begin() + static_cast<long>(run_len(rng)));

        const double want = testoracle::ndcg(ranking, judged, 5);
        const double got = ndcg_at_k({run_of("q", ranking)}, qrels, 5);
        if (want < 0.0) {
            CHECK(got == 0.0);  // excluded query, empty mean
        } else {
            CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-9));
            CHECK(got >= 0.0);
            CHECK(got <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("answer normalization") {
    CHECK(normalize_answer("The Quick, Brown Fox!") == "quick brown fox");
    CHECK(normalize_answer("An apple a day") == "apple day");
    CHECK(normalize_answer("A an the") == "");
    CHECK(normalize_answer("  spaced\tout\n") == "spaced out");
    CHECK(normalize_answer("it's") == "its");
    CHECK(normalize_answer("state-of-the-art") == "stateoftheart");
    CHECK(normalize_answer("1,000") == "1000");
    CHECK(normalize_answer("") == "");
    // "theory" starts with "the" but is not an article
    CHECK(normalize_answer("the theory") == "theory");
}

TEST_CASE("exact match is normalization-invariant") {
    CHECK(exact_match("The Answer", {"answer"}) == 1);
    CHECK(exact_match("answer!", {"Answer."}) == 1);
    CHECK(exact_match("an answer", {"answer"}) == 1);
    CHECK(exact_match("different", {"answer"}) == 0);
    CHECK(exact_match("answer", {"wrong", "answer", "also wrong"}) == 1);
    CHECK(exact_match("", {""}) == 1);
    CHECK(exact_match("x", {""}) == 0);
    CHECK_THROWS_AS(exact_match("x", {}), std::invalid_argument);
}

TEST_CASE("token f1 uses multiset overlap and the best gold") {
    // pred {x, x, y} vs gold {x, y, y}: overlap 2, p = r = 2/3
    CHECK_THAT(token_f1("x x y", {"x y y"}), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));

    // best over golds: second gold matches exactly
    CHECK(token_f1("red fox", {"blue crane", "red fox"}) == 1.0);

    // subset: pred {quick} vs gold {quick, brown}: p 1, r 1/2, f1 2/3
    CHECK_THAT(token_f1("quick", {"quick brown"}), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));

    // disjoint tokens score zero
    CHECK(token_f1("cat", {"dog"}) == 0.0);

    // repeated prediction tokens are not double credit
    CHECK_THAT(token_f1("x x x x", {"x"}), Catch::Matchers::WithinAbs(2.0 * 0.25 / 1.25, 1e-12));

    CHECK_THROWS_AS(token_f1("x", {}), std::invalid_argument);
}

TEST_CASE("token f1 empty-side conventions") {
    // both sides normalize to empty: 1
    CHECK(token_f1("the", {"a"}) == 1.0);
    CHECK(token_f1("", {""}) == 1.0);
    // exactly one side empty: that pair scores 0
    CHECK(token_f1("word", {"the"}) == 0.0);
    CHECK(token_f1("the", {"word"}) == 0.0);
    // but another non-empty gold can still win
    CHECK(token_f1("word", {"the", "word"}) == 1.0);
}

TEST_CASE("exact match implies perfect f1") {
    std::mt19937 rng(13579);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "42", "x9"};
    std::uniform_int_distribution<std::size_t> len(1, 4);
    std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::string gold;
        const auto L = len(rng);
        for (std::size_t i = 0; i < L; ++i) {
            if (!gold.empty()) gold += ' ';
            gold += words[word(rng)];
        }
        std::string pred = "The " + gold + "!";  // same after normalization
        REQUIRE(exact_match(pred, {gold}) == 1);
        CHECK(token_f1(pred, {gold}) == 1.0);
    }
}
