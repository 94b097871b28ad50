#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include <hybridir/query_engine.hpp>

#include "test_util.hpp"

using namespace hybridir;

namespace {

std::vector<Document> fruit_corpus() {
    return {
        {"b1", "apple pie", "apple banana cherry", {}},
        {"b2", "banana split", "banana banana", {}},
        {"b3", "cherry", "apple cherry", {}},
    };
}

std::vector<Document> phrase_corpus() {
    return {
        {"p1", "", "quick brown fox jumps", {}},
        {"p2", "", "brown quick foxtrot", {}},
        {"p3", "", "quick brown foxtrot quick brown fox", {}},
        {"p4", "", "quick brown crane", {}},
    };
}

std::vector<Document> random_corpus(std::mt19937& rng, std::size_t n) {
    const std::vector<std::string> vocab = {"ant", "bee", "cow", "dog", "eel",
                                            "fox", "gnu", "hen", "ibis", "jay"};
    std::uniform_int_distribution<std::size_t> len(0, 9);
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        auto make_text = [&]() {
            std::string out;
            const auto L = len(rng);
            for (std::size_t w = 0; w < L; ++w) {
                if (!out.empty()) out += ' ';
                out += vocab[word(rng)];
            }
            return out;
        };
        std::string id = "d" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        docs.push_back({id, make_text(), make_text(), {}});
    }
    return docs;
}

}  // namespace

TEST_CASE("single-field queries collapse to plain bm25 exactly") {
    std::mt19937 rng(31337);
    auto docs = random_corpus(rng, 20);
    auto idx = build_lexical(docs, {"title", "text"});
    const std::vector<std::string> one{"text"};
    const std::string query = "ant bee fox ant";

    for (auto type : {MultiMatchType::best_fields, MultiMatchType::most_fields,
                      MultiMatchType::cross_fields}) {
        for (std::uint32_t ord = 0; ord < idx.doc_count(); ++ord) {
            const double single =
                multi_match_score(idx, MultiMatchType::match_single, one, query, ord);
            // same arithmetic path, so equality is exact, not approximate
            CHECK(multi_match_score(idx, type, one, query, ord, {}, 0.4) == single);
        }
    }
}

TEST_CASE("best_fields interpolates between max and sum") {
    auto idx = build_lexical(fruit_corpus(), {"title", "text"});
    const std::vector<std::string> both{"title", "text"};
    const std::string query = "apple banana";
    const auto terms = analyze(query).terms();

    for (std::uint32_t ord = 0; ord < idx.doc_count(); ++ord) {
        const double st = bm25_score_terms(idx, "title", terms, ord);
        const double sx = bm25_score_terms(idx, "text", terms, ord);
        const double best = std::max(st, sx);
        const double sum = st + sx;

        CHECK_THAT(multi_match_score(idx, MultiMatchType::best_fields, both, query, ord),
                   Catch::Matchers::WithinAbs(best, 1e-12));
        CHECK_THAT(multi_match_score(idx, MultiMatchType::best_fields, both, query, ord, {}, 0.3),
                   Catch::Matchers::WithinAbs(best + 0.3 * (sum - best), 1e-12));
        CHECK_THAT(multi_match_score(idx, MultiMatchType::most_fields, both, query, ord),
                   Catch::Matchers::WithinAbs(sum, 1e-12));
        // tie_breaker 1 degenerates to most_fields
        CHECK_THAT(multi_match_score(idx, MultiMatchType::best_fields, both, query, ord, {}, 1.0),
                   Catch::Matchers::WithinAbs(sum, 1e-12));
    }
}

TEST_CASE("cross_fields blends document frequencies across fields") {
    std::vector<Document> docs = {
        {"d1", "apple", "apple banana", {}},
        {"d2", "banana", "cherry", {}},
    };
    auto idx = build_lexical(docs, {"title", "text"});
    const std::vector<std::string> both{"title", "text"};

    // every term has max-df 1 over the two fields, so idf* = ln 2; the best
    // field per term is the one with the higher saturation
    const double idf = std::log(2.0);
    const double sat_title = 1.0;               // tf 1, len 1, avg 1
    const double sat_text_d1 = 2.2 / 2.5;       // tf 1, len 2, avg 1.5

    const double d1 = multi_match_score(idx, MultiMatchType::cross_fields, both, "apple banana", 0);
    CHECK_THAT(d1, Catch::Matchers::WithinAbs(idf * (sat_title + sat_text_d1), 1e-12));

    const double d2 = multi_match_score(idx, MultiMatchType::cross_fields, both, "apple banana", 1);
    CHECK_THAT(d2, Catch::Matchers::WithinAbs(idf * sat_title, 1e-12));
}

TEST_CASE("phrase_prefix requires consecutive positions") {
    auto idx = build_lexical(phrase_corpus(), {"text"});
    const std::vector<std::string> text{"text"};
    const std::string query = "quick brown fo";

    const double idf3 = std::log(10.0 / 7.0);  // df = min(3, 4, 3)

    // p1: one occurrence, length 4 = avg, saturation 1
    CHECK_THAT(multi_match_score(idx, MultiMatchType::phrase_prefix, text, query, 0),
               Catch::Matchers::WithinAbs(idf3, 1e-12));

    // p2 has all the words but out of order
    CHECK(multi_match_score(idx, MultiMatchType::phrase_prefix, text, query, 1) == 0.0);

    // p3: two occurrences (one ends in foxtrot, one in fox), length 6
    const double sat2 = 4.4 / 3.65;
    CHECK_THAT(multi_match_score(idx, MultiMatchType::phrase_prefix, text, query, 2),
               Catch::Matchers::WithinAbs(idf3 * sat2, 1e-12));

    // p4 never completes the phrase
    CHECK(multi_match_score(idx, MultiMatchType::phrase_prefix, text, query, 3) == 0.0);

    auto hits = multi_match_top_k(idx, MultiMatchType::phrase_prefix, text, query, 10);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].doc_id == "p3");
    CHECK(hits[1].doc_id == "p1");
}

TEST_CASE("single-term phrase_prefix matches on the prefix alone") {
    auto idx = build_lexical(phrase_corpus(), {"text"});
    const std::vector<std::string> text{"text"};

    // "fo" expands to fox and foxtrot: docs p1, p2, p3; df is the union count
    const double idf3 = std::log(10.0 / 7.0);
    CHECK_THAT(multi_match_score(idx, MultiMatchType::phrase_prefix, text, "fo", 0),
               Catch::Matchers::WithinAbs(idf3, 1e-12));
    // p3 holds two matching occurrences
    CHECK_THAT(multi_match_score(idx, MultiMatchType::phrase_prefix, text, "fo", 2),
               Catch::Matchers::WithinAbs(idf3 * (4.4 / 3.65), 1e-12));

    auto hits = multi_match_top_k(idx, MultiMatchType::phrase_prefix, text, "fo", 10);
    std::set<std::string> ids;
    for (const auto& h : hits) ids.insert(h.doc_id);
    CHECK(ids == std::set<std::string>{"p1", "p2", "p3"});
}

TEST_CASE("phrase_prefix over several fields keeps the best field") {
    std::vector<Document> docs = {
        {"m1", "quick brown fox", "unrelated words entirely", {}},
        {"m2", "nothing here", "quick brown foxhound", {}},
    };
    auto idx = build_lexical(docs, {"title", "text"});
    const std::vector<std::string> both{"title", "text"};

    const double t1 = multi_match_score(idx, MultiMatchType::phrase_prefix, both, "quick brown fo", 0);
    const double x2 = multi_match_score(idx, MultiMatchType::phrase_prefix, both, "quick brown fo", 1);
    CHECK(t1 > 0.0);
    CHECK(x2 > 0.0);
    // each doc matches in exactly one field; the score equals that field's score
    auto only_title = multi_match_score(idx, MultiMatchType::phrase_prefix, {"title"}, "quick brown fo", 0);
    auto only_text = multi_match_score(idx, MultiMatchType::phrase_prefix, {"text"}, "quick brown fo", 1);
    CHECK(t1 == only_title);
    CHECK(x2 == only_text);
}

TEST_CASE("bool_prefix scores ordinary terms plus an expanded last term") {
    auto idx = build_lexical(phrase_corpus(), {"text"});
    const std::vector<std::string> text{"text"};
    const std::string query = "quick bro";

    // quick appears in every doc, and so does the bro-prefix union (just brown)
    const double idf_df4 = std::log(10.0 / 9.0);

    // p1: quick tf 1 at avg length, brown tf 1
    CHECK_THAT(multi_match_score(idx, MultiMatchType::bool_prefix, text, query, 0),
               Catch::Matchers::WithinAbs(2 * idf_df4, 1e-12));

    // p2: quick and brown in swapped order, tf 1 each at length 3
    const double sat_len3 = 2.2 / 1.975;
    CHECK_THAT(multi_match_score(idx, MultiMatchType::bool_prefix, text, query, 1),
               Catch::Matchers::WithinAbs(2 * idf_df4 * sat_len3, 1e-12));

    // p3: both terms twice at length 6
    const double sat2 = 4.4 / 3.65;
    CHECK_THAT(multi_match_score(idx, MultiMatchType::bool_prefix, text, query, 2),
               Catch::Matchers::WithinAbs(2 * idf_df4 * sat2, 1e-12));

    // unlike phrase_prefix, word order does not matter: p2 still matches
    auto hits = multi_match_top_k(idx, MultiMatchType::bool_prefix, text, query, 10);
    CHECK(hits.size() == 4);

    // a doc missing the ordinary term still scores on the prefix alone
    const double idf_df1 = std::log(10.0 / 3.0);
    CHECK_THAT(multi_match_score(idx, MultiMatchType::bool_prefix, text, "jumps bro", 0),
               Catch::Matchers::WithinAbs(idf_df1 + idf_df4, 1e-12));
    CHECK_THAT(multi_match_score(idx, MultiMatchType::bool_prefix, text, "jumps bro", 1),
               Catch::Matchers::WithinAbs(idf_df4 * sat_len3, 1e-12));
}

TEST_CASE("every mode lists exactly the documents scoring above zero") {
    auto docs = phrase_corpus();
    docs.push_back({"p5", "quick title", "completely different body", {}});
    auto idx = build_lexical(docs, {"title", "text"});
    const std::vector<std::string> both{"title", "text"};

    struct Case {
        MultiMatchType type;
        std::vector<std::string> fields;
        std::string query;
    };
    const std::vector<Case> cases = {
        {MultiMatchType::match_single, {"text"}, "quick fox"},
        {MultiMatchType::best_fields, both, "quick fox"},
        {MultiMatchType::most_fields, both, "quick fox"},
        {MultiMatchType::cross_fields, both, "quick fox"},
        {MultiMatchType::phrase_prefix, both, "quick brown fo"},
        {MultiMatchType::bool_prefix, both, "quick fo"},
    };
    for (const auto& c : cases) {
        std::set<std::string> positive;
        for (std::uint32_t ord = 0; ord < idx.doc_count(); ++ord) {
            if (multi_match_score(idx, c.type, c.fields, c.query, ord) > 0.0) {
                positive.insert(idx.doc_id(ord));
            }
        }
        auto hits = multi_match_top_k(idx, c.type, c.fields, c.query, 100);
        std::set<std::string> listed;
        for (const auto& h : hits) {
            CHECK(h.score > 0.0);
            listed.insert(h.doc_id);
        }
        CHECK(listed == positive);
    }
}

TEST_CASE("multi_match argument validation") {
    auto idx = build_lexical(fruit_corpus(), {"title", "text"});
    const std::vector<std::string> both{"title", "text"};

    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, both, "...", 0),
                    std::invalid_argument);  // analyzes to nothing
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, both, "", 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, {"body"}, "x", 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, {"text", "text"}, "x", 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, {}, "x", 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::match_single, both, "x", 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, both, "x", 0, {}, 1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_score(idx, MultiMatchType::best_fields, both, "x", 99),
                    std::invalid_argument);
    CHECK_THROWS_AS(multi_match_top_k(idx, MultiMatchType::best_fields, both, "x", 0),
                    std::invalid_argument);
}

TEST_CASE("type and kind names round-trip with aliases") {
    for (auto t : {MultiMatchType::match_single, MultiMatchType::best_fields,
                   MultiMatchType::most_fields, MultiMatchType::cross_fields,
                   MultiMatchType::phrase_prefix, MultiMatchType::bool_prefix}) {
        CHECK(multi_match_type_from_string(to_string(t)) == t);
    }
    CHECK(multi_match_type_from_string("match") == MultiMatchType::match_single);
    CHECK_THROWS_AS(multi_match_type_from_string("fuzzy"), std::invalid_argument);

    for (auto k : {IndexKind::bm25, IndexKind::dense, IndexKind::sparse}) {
        CHECK(index_kind_from_string(to_string(k)) == k);
    }
    CHECK(index_kind_from_string("lexical") == IndexKind::bm25);
    CHECK(index_kind_from_string("knn") == IndexKind::dense);
    CHECK_THROWS_AS(index_kind_from_string("graph"), std::invalid_argument);
}

TEST_CASE("blending combines scores additively") {
    std::vector<ScoredHit> lex = {{"a", 2.0, 1}, {"b", 1.0, 2}};
    std::vector<ScoredHit> sem = {{"b", 0.5, 1}, {"c", 0.4, 2}};

    BlendParams p;
    p.semantic_boost = 2.0;

    auto hits = blend_hits(lex, sem, p, 10);
    REQUIRE(hits.size() == 3);
    // a = 2.0, b = 1.0 + 2*0.5 = 2.0: tie resolves by id
    CHECK(hits[0].doc_id == "a");
    CHECK(hits[1].doc_id == "b");
    CHECK(hits[0].score == 2.0);
    CHECK(hits[1].score == 2.0);
    CHECK(hits[2].doc_id == "c");
    CHECK_THAT(hits[2].score, Catch::Matchers::WithinAbs(0.8, 1e-12));

    p.require_lexical_match = true;
    auto gated = blend_hits(lex, sem, p, 10);
    REQUIRE(gated.size() == 2);
    CHECK(gated[0].doc_id == "a");
    CHECK(gated[1].doc_id == "b");
}

TEST_CASE("blend degenerate settings") {
    std::vector<ScoredHit> lex = {{"a", 3.0, 1}, {"b", 2.0, 2}, {"c", 1.0, 3}};
    std::vector<ScoredHit> sem = {{"c", 9.0, 1}, {"d", 8.0, 2}};

    SECTION("zero boost keeps the lexical ordering as a prefix") {
        BlendParams p;
        p.semantic_boost = 0.0;
        auto hits = blend_hits(lex, sem, p, 10);
        REQUIRE(hits.size() == 4);
        CHECK(hits[0].doc_id == "a");
        CHECK(hits[1].doc_id == "b");
        CHECK(hits[2].doc_id == "c");
        CHECK(hits[3].doc_id == "d");
        CHECK(hits[3].score == 0.0);
    }
    SECTION("empty lexical side yields the semantic ranking") {
        BlendParams p;
        p.semantic_boost = 0.5;
        auto hits = blend_hits({}, sem, p, 10);
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].doc_id == "c");
        CHECK(hits[1].doc_id == "d");
        CHECK(hits[0].score == 4.5);
    }
    SECTION("empty lexical side with the gate on yields nothing") {
        BlendParams p;
        p.require_lexical_match = true;
        CHECK(blend_hits({}, sem, p, 10).empty());
    }
    SECTION("parameter validation") {
        BlendParams neg;
        neg.semantic_boost = -0.1;
        CHECK_THROWS_AS(blend_hits(lex, sem, neg, 10), std::invalid_argument);
        CHECK_THROWS_AS(blend_hits(lex, sem, {}, 0), std::invalid_argument);
        BlendParams badknn;
        badknn.knn.k = 0;
        CHECK_THROWS_AS(blend_hits(lex, sem, badknn, 10), std::invalid_argument);
    }
}

TEST_CASE("blend matches the formula on random inputs") {
    std::mt19937 rng(555);
    std::uniform_real_distribution<double> score(0.01, 5.0);
    std::uniform_real_distribution<double> boost(0.0, 3.0);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int trial = 0; trial < 40; ++trial) {
        std::vector<ScoredHit> lex, sem;
        std::map<std::string, double> lex_map, sem_map;
        for (int i = 0; i < 12; ++i) {
            std::string id = "n" + std::to_string(i);
            if (coin(rng)) {
                lex_map[id] = score(rng);
                lex.push_back({id, lex_map[id], 0});
            }
            if (coin(rng)) {
                sem_map[id] = score(rng);
                sem.push_back({id, sem_map[id], 0});
            }
        }
        BlendParams p;
        p.semantic_boost = boost(rng);
        p.require_lexical_match = coin(rng) == 1;

        auto hits = blend_hits(lex, sem, p, 100);

        std::set<std::string> expected_ids;
        for (const auto& [id, s] : lex_map) expected_ids.insert(id);
        if (!p.require_lexical_match) {
            for (const auto& [id, s] : sem_map) expected_ids.insert(id);
        }
        REQUIRE(hits.size() == expected_ids.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(expected_ids.count(hits[i].doc_id) == 1);
            const double l = lex_map.count(hits[i].doc_id) ? lex_map[hits[i].doc_id] : 0.0;
            const double s = sem_map.count(hits[i].doc_id) ? sem_map[hits[i].doc_id] : 0.0;
            CHECK(hits[i].doc_id.size() > 0);
            CHECK(hits[i].score == p.semantic_boost * s + l);
            if (i > 0) {
                const bool ordered = hits[i - 1].score > hits[i].score ||
                                     (hits[i - 1].score == hits[i].score &&
                                      hits[i - 1].doc_id < hits[i].doc_id);
                CHECK(ordered);
            }
        }
    }
}

TEST_CASE("retriever specs serialize and validate") {
    RetrieverSpec spec;
    spec.kind = IndexKind::sparse;
    spec.type = MultiMatchType::best_fields;
    spec.fields = {"title", "text"};
    spec.tie_breaker = 0.2;
    BlendParams blend;
    blend.semantic_boost = 0.7;
    blend.knn = {33, 50};
    blend.require_lexical_match = true;
    spec.blend = blend;

    CHECK(spec.name() == "sparse-best_fields");

    auto j = spec.to_json();
    auto back = RetrieverSpec::from_json(j);
    CHECK(back.kind == spec.kind);
    CHECK(back.type == spec.type);
    CHECK(back.fields == spec.fields);
    CHECK(back.tie_breaker == spec.tie_breaker);
    REQUIRE(back.blend.has_value());
    CHECK(back.blend->semantic_boost == 0.7);
    CHECK(back.blend->knn.k == 33);
    CHECK(back.blend->knn.num_candidates == 50);
    CHECK(back.blend->require_lexical_match);
}

TEST_CASE("spec parsing fills kind-specific defaults") {
    auto dense = RetrieverSpec::from_json({{"kind", "dense"}});
    REQUIRE(dense.blend.has_value());
    CHECK(dense.blend->semantic_boost == 0.1);
    CHECK(dense.blend->knn.k == 10);
    CHECK(dense.blend->knn.num_candidates == 100);
    CHECK_FALSE(dense.blend->require_lexical_match);
    CHECK(dense.type == MultiMatchType::match_single);
    CHECK(dense.fields == std::vector<std::string>{"text"});

    auto sparse = RetrieverSpec::from_json({{"kind", "sparse"}});
    REQUIRE(sparse.blend.has_value());
    CHECK(sparse.blend->semantic_boost == 1.0);
    CHECK(sparse.blend->require_lexical_match);

    // requesting k beyond num_candidates widens num_candidates
    auto wide = RetrieverSpec::from_json({{"kind", "dense"}, {"k", 200}});
    CHECK(wide.blend->knn.num_candidates == 200);

    auto aliased = RetrieverSpec::from_json({{"kind", "lexical"}, {"type", "match"}});
    CHECK(aliased.kind == IndexKind::bm25);
    CHECK(aliased.type == MultiMatchType::match_single);
    CHECK_FALSE(aliased.blend.has_value());
}

TEST_CASE("spec parsing rejects malformed input") {
    CHECK_THROWS_WITH(RetrieverSpec::from_json({{"kind", "bm25"}, {"boots", 1}}),
                      Catch::Matchers::ContainsSubstring("boots"));
    CHECK_THROWS_WITH(RetrieverSpec::from_json({{"kind", "bm25"}, {"boost", 0.5}}),
                      Catch::Matchers::ContainsSubstring("blend"));
    CHECK_THROWS_AS(RetrieverSpec::from_json({{"kind", "voronoi"}}), std::invalid_argument);
    CHECK_THROWS_AS(RetrieverSpec::from_json({{"tie_breaker", 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(RetrieverSpec::from_json(nlohmann::json::array()), std::invalid_argument);

    RetrieverSpec bare;
    bare.kind = IndexKind::dense;  // hybrid without blend parameters
    CHECK_THROWS_AS(bare.validate(), std::invalid_argument);

    RetrieverSpec stray;
    stray.blend = BlendParams{};  // bm25 with blend parameters
    CHECK_THROWS_AS(stray.validate(), std::invalid_argument);
}

TEST_CASE("the six standard presets have the documented shape") {
    auto presets = sextet_presets();
    REQUIRE(presets.size() == 6);

    CHECK(presets[0].name() == "bm25-match_single");
    CHECK(presets[1].name() == "bm25-best_fields");
    CHECK(presets[2].name() == "dense-match_single");
    CHECK(presets[3].name() == "dense-best_fields");
    CHECK(presets[4].name() == "sparse-match_single");
    CHECK(presets[5].name() == "sparse-best_fields");

    const std::vector<std::string> mq{"text"};
    const std::vector<std::string> bf{"title", "text"};
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& s = presets[i];
        CHECK(s.fields == (i % 2 == 0 ? mq : bf));
        CHECK(s.tie_breaker == 0.0);
        CHECK_NOTHROW(s.validate());
        if (s.kind == IndexKind::bm25) {
            CHECK_FALSE(s.blend.has_value());
        } else {
            REQUIRE(s.blend.has_value());
            CHECK(s.blend->semantic_boost == 0.1);
            CHECK(s.blend->knn.k == 10);
            CHECK(s.blend->knn.num_candidates == 100);
            CHECK(s.blend->require_lexical_match == (s.kind == IndexKind::sparse));
        }
    }
}

TEST_CASE("dense retrieval widens knn to the requested depth") {
    std::vector<Document> docs;
    DenseStore store;
    for (int i = 0; i < 30; ++i) {
        std::string id = "v" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        docs.push_back({id, "", "filler body words", {}});
        DenseVector v;
        v.values.assign(30, 0.0);
        v.values[static_cast<std::size_t>(i)] = 1.0;
        store.add(id, v);
    }
    auto idx = build_lexical(docs, {"text"});

    DenseVector qv;
    qv.values.resize(30);
    for (std::size_t i = 0; i < 30; ++i) qv.values[i] = static_cast<double>(i + 1);

    SearchContext ctx;
    ctx.lexical = &idx;
    ctx.dense = &store;
    ctx.embed_query = [&](const std::string&) { return qv; };

    RetrieverSpec spec;
    spec.kind = IndexKind::dense;
    BlendParams p;
    p.semantic_boost = 1.0;
    p.knn = {10, 100};
    spec.blend = p;

    // the query term misses the corpus, so results are purely semantic;
    // 25 > knn.k proves the candidate pool followed the requested depth
    auto hits = execute_retriever(spec, ctx, "zzz", 25);
    REQUIRE(hits.size() == 25);
    CHECK(hits[0].doc_id == "v29");
    CHECK(hits.back().doc_id == "v05");
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score > hits[i].score);

    // with the lexical gate on, no lexical match means no results at all
    spec.blend->require_lexical_match = true;
    CHECK(execute_retriever(spec, ctx, "zzz", 25).empty());
}

TEST_CASE("stored query vectors take precedence over the embedder") {
    std::vector<Document> docs = {{"d1", "", "alpha", {}}, {"d2", "", "beta", {}}};
    auto idx = build_lexical(docs, {"text"});
    DenseStore store;
    store.add("d1", DenseVector{{1.0, 0.0}});
    store.add("d2", DenseVector{{0.0, 1.0}});

    std::unordered_map<std::string, DenseVector> stored;
    stored.emplace("q1", DenseVector{{0.0, 1.0}});  // points at d2

    SearchContext ctx;
    ctx.lexical = &idx;
    ctx.dense = &store;
    ctx.query_vectors = &stored;
    ctx.embed_query = [](const std::string&) { return DenseVector{{1.0, 0.0}}; };  // points at d1

    RetrieverSpec spec;
    spec.kind = IndexKind::dense;
    BlendParams p;
    p.semantic_boost = 1.0;
    spec.blend = p;

    auto by_id = execute_retriever(spec, ctx, "zzz", 1, "q1");
    REQUIRE(by_id.size() == 1);
    CHECK(by_id[0].doc_id == "d2");

    // unknown id falls back to the embedder
    auto by_embed = execute_retriever(spec, ctx, "zzz", 1, "q-unknown");
    REQUIRE(by_embed.size() == 1);
    CHECK(by_embed[0].doc_id == "d1");
}

TEST_CASE("sparse retrieval honors the lexical gate") {
    std::vector<Document> docs = {
        {"s1", "", "red fruit", {}},
        {"s2", "", "red berry", {}},
        {"s3", "", "blue sky", {}},
    };
    auto idx = build_lexical(docs, {"text"});

    SparseStore store;
    store.add("s1", SparseVector{{{"red", 0.5}}});
    store.add("s2", SparseVector{{{"red", 0.5}, {"berry", 2.0}}});
    store.add("s3", SparseVector{{{"red", 9.0}}});  // expanded, never matched lexically

    TfIdfExpander expander(CorpusStats::from_index(idx));

    SearchContext ctx;
    ctx.lexical = &idx;
    ctx.sparse = &store;
    ctx.expander = &expander;

    RetrieverSpec spec;
    spec.kind = IndexKind::sparse;
    BlendParams p;
    p.semantic_boost = 10.0;
    p.require_lexical_match = true;
    spec.blend = p;

    auto gated = execute_retriever(spec, ctx, "red", 10);
    REQUIRE(gated.size() == 2);
    for (const auto& h : gated) CHECK(h.doc_id != "s3");

    spec.blend->require_lexical_match = false;
    auto open = execute_retriever(spec, ctx, "red", 10);
    REQUIRE(open.size() == 3);
    CHECK(open[0].doc_id == "s3");  // huge expansion weight dominates when ungated
}

TEST_CASE("execute_retriever reports missing context pieces") {
    std::vector<Document> docs = {{"d1", "", "alpha", {}}};
    auto idx = build_lexical(docs, {"text"});

    RetrieverSpec bm25;
    SearchContext empty_ctx;
    CHECK_THROWS_WITH(execute_retriever(bm25, empty_ctx, "alpha", 5),
                      Catch::Matchers::ContainsSubstring("lexical index"));

    SearchContext lex_only;
    lex_only.lexical = &idx;
    RetrieverSpec dense;
    dense.kind = IndexKind::dense;
    dense.blend = dense_blend_defaults();
    CHECK_THROWS_WITH(execute_retriever(dense, lex_only, "alpha", 5),
                      Catch::Matchers::ContainsSubstring("dense vector store"));

    RetrieverSpec sparse;
    sparse.kind = IndexKind::sparse;
    sparse.blend = sparse_blend_defaults();
    CHECK_THROWS_WITH(execute_retriever(sparse, lex_only, "alpha", 5),
                      Catch::Matchers::ContainsSubstring("sparse vector store"));

    DenseStore store;
    store.add("d1", DenseVector{{1.0}});
    SearchContext no_embedder;
    no_embedder.lexical = &idx;
    no_embedder.dense = &store;
    CHECK_THROWS_WITH(execute_retriever(dense, no_embedder, "alpha", 5, "q9"),
                      Catch::Matchers::ContainsSubstring("dense-match_single") &&
                          Catch::Matchers::ContainsSubstring("q9"));

    SearchContext no_expander;
    no_expander.lexical = &idx;
    SparseStore sstore;
    sstore.add("d1", SparseVector{{{"alpha", 1.0}}});
    no_expander.sparse = &sstore;
    CHECK_THROWS_WITH(execute_retriever(sparse, no_expander, "alpha", 5),
                      Catch::Matchers::ContainsSubstring("expander"));

    CHECK_THROWS_AS(execute_retriever(bm25, lex_only, "alpha", 0), std::invalid_argument);
}

TEST_CASE("repeated execution is deterministic") {
    std::mt19937 rng(77);
    auto docs = random_corpus(rng, 25);
    auto idx = build_lexical(docs, {"title", "text"});

    DenseStore dense;
    SparseStore sparse;
    TfIdfExpander expander(CorpusStats::from_index(idx));
    for (const auto& d : docs) {
        dense.add(d.id, toy_embed(d.title + " " + d.text, 32));
        auto expansion = expander.expand(d.title + " " + d.text);
        if (expansion.nonzeros() > 0) sparse.add(d.id, expansion);
    }

    SearchContext ctx;
    ctx.lexical = &idx;
    ctx.dense = &dense;
    ctx.sparse = &sparse;
    ctx.expander = &expander;
    ctx.embed_query = [](const std::string& q) { return toy_embed(q, 32); };

    for (const auto& spec : sextet_presets()) {
        auto first = execute_retriever(spec, ctx, "ant bee fox", 10);
        auto second = execute_retriever(spec, ctx, "ant bee fox", 10);
        REQUIRE(first.size() == second.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            CHECK(first[i].doc_id == second[i].doc_id);
            CHECK(first[i].score == second[i].score);
            CHECK(first[i].rank == second[i].rank);
        }
    }
}
