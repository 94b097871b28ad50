#pragma once

/** \file synthetic.hpp
 *  \brief Deterministic synthetic benchmarks with known ranking structure.
 *
 * The retrieval benchmark builds 16 "families" of 12 documents plus 8 filler
 * documents (200 total). Every title has exactly 2 tokens and every body
 * exactly 18, so BM25 length normalization is uniform and rankings follow
 * from document frequencies alone. Member i of family j carries:
 *
 *   - title:  its own code token (in no other title) + the family topic word
 *   - body:   the family story word, the codes of its 11 siblings (never its
 *             own), a unique token, for some members a repeated "hog" token,
 *             and unique padding
 *
 * Three query shapes probe different failure modes:
 *   - A ("code topic story"): the code names one document via its title but
 *     appears in 11 sibling bodies, so body-only retrieval ranks the target
 *     12th while title-aware retrieval ranks it 1st.
 *   - B ("unique story"): the unique body token pins the target to rank 1
 *     for every retriever.
 *   - C ("story hog"): six siblings carry the hog token twice, the target
 *     once, putting the target at rank 7 (inside the top 10, outside the
 *     top 5) everywhere.
 *
 * The answer-benchmark fixture is 25 fact documents plus 10 distractors;
 * each question asks for the opening year stated in one document's second
 * sentence, which is also the gold answer.
 */

#include <cstdio>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace hybridir {

namespace detail {

inline std::string two_digits(std::size_t n) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", n);
    return buf;
}

inline std::string family_code(std::size_t j, std::size_t i) {
    return "zq" + std::to_string(j) + "k" + std::to_string(i);
}

}  // namespace detail

inline constexpr std::size_t synthetic_families = 16;
inline constexpr std::size_t synthetic_family_size = 12;
inline constexpr std::size_t synthetic_fillers = 8;
inline constexpr std::size_t synthetic_hog_families = 8;  ///< families 0..7 carry a hog token

/// The 200-document, 50-query retrieval benchmark described above.
inline BenchmarkBundle make_synthetic_benchmark() {
    BenchmarkBundle b;
    b.name = "synthetic";

    for (std::size_t j = 0; j < synthetic_families; ++j) {
        for (std::size_t i = 0; i < synthetic_family_size; ++i) {
            Document d;
            d.id = "d" + detail::two_digits(j) + detail::two_digits(i);
            d.title = detail::family_code(j, i) + " topic" + std::to_string(j);
            std::vector<std::string> body;
            body.push_back("story" + std::to_string(j));
            for (std::size_t s = 0; s < synthetic_family_size; ++s) {
                if (s != i) body.push_back(detail::family_code(j, s));
            }
            body.push_back("uq" + std::to_string(j) + "x" + std::to_string(i));
            if (j < synthetic_hog_families) {
                // members 1..6 carry the hog twice, member 0 (the C target) once
                if (i >= 1 && i <= 6) {
                    body.push_back("mh" + std::to_string(j));
                    body.push_back("mh" + std::to_string(j));
                } else if (i == 0) {
                    body.push_back("mh" + std::to_string(j));
                }
            }
            for (std::size_t p = 0; body.size() < 18; ++p) {
                body.push_back("pd" + std::to_string(j) + "x" + std::to_string(i) + "n" +
                               std::to_string(p));
            }
            for (std::size_t t = 0; t < body.size(); ++t) {
                if (t > 0) d.text += ' ';
                d.text += body[t];
            }
            b.corpus.push_back(std::move(d));
        }
    }
    for (std::size_t f = 0; f < synthetic_fillers; ++f) {
        Document d;
        d.id = "f" + detail::two_digits(f);
        d.title = "fz" + std::to_string(f) + " fw" + std::to_string(f);
        for (std::size_t t = 0; t < 18; ++t) {
            if (t > 0) d.text += ' ';
            d.text += "f" + std::to_string(f) + "p" + std::to_string(t);
        }
        b.corpus.push_back(std::move(d));
    }

    auto target_id = [](std::size_t j, std::size_t i) {
        return "d" + detail::two_digits(j) + detail::two_digits(i);
    };
    for (std::size_t q = 0; q < 30; ++q) {
        const std::size_t j = q % synthetic_families;
        const std::size_t i = (q * 7 + 2) % synthetic_family_size;
        QueryRecord rec;
        rec.id = "qa" + detail::two_digits(q);
        rec.text = detail::family_code(j, i) + " topic" + std::to_string(j) + " story" +
                   std::to_string(j);
        b.qrels.add(rec.id, target_id(j, i), 1);
        b.queries.push_back(std::move(rec));
    }
    for (std::size_t q = 0; q < 12; ++q) {
        const std::size_t j = q;
        const std::size_t i = (q * 5) % synthetic_family_size;
        QueryRecord rec;
        rec.id = "qb" + detail::two_digits(q);
        rec.text = "uq" + std::to_string(j) + "x" + std::to_string(i) + " story" +
                   std::to_string(j);
        b.qrels.add(rec.id, target_id(j, i), 1);
        b.queries.push_back(std::move(rec));
    }
    for (std::size_t q = 0; q < synthetic_hog_families; ++q) {
        QueryRecord rec;
        rec.id = "qc" + detail::two_digits(q);
        rec.text = "story" + std::to_string(q) + " mh" + std::to_string(q);
        b.qrels.add(rec.id, target_id(q, 0), 1);
        b.queries.push_back(std::move(rec));
    }
    validate_bundle(b);
    return b;
}

/// Same bundle with every title blanked; field-aware retrieval must then
/// collapse onto body-only retrieval.
inline BenchmarkBundle make_titleless(BenchmarkBundle b) {
    b.name += "-titleless";
    for (auto& d : b.corpus) d.title.clear();
    return b;
}

/// The 35-document, 25-question answer benchmark described above.
inline BenchmarkBundle make_rag_fixture() {
    static const std::vector<std::string> nouns = {
        "falcon", "otter",  "heron",   "badger",     "lynx",      "marten", "osprey",
        "beaver", "weasel", "stoat",   "raven",      "crane",     "plover", "curlew",
        "avocet", "bittern", "dunlin", "godwit",     "sanderling", "turnstone", "wigeon",
        "teal",   "pintail", "goldeneye", "smew"};
    BenchmarkBundle b;
    b.name = "rag-fixture";
    for (std::size_t n = 0; n < nouns.size(); ++n) {
        const std::string& noun = nouns[n];
        const std::string year = std::to_string(1950 + n);
        const std::string place = "valley" + std::to_string(n);
        Document d;
        d.id = "r" + detail::two_digits(n);
        d.title = noun + " sanctuary";
        d.text = "The " + noun + " is described in many field notes. The " + noun +
                 " sanctuary opened in " + year + " near " + place + ".";
        b.corpus.push_back(std::move(d));

        QueryRecord q;
        q.id = "q" + detail::two_digits(n);
        q.text = "When did the " + noun + " sanctuary open?";
        q.gold_answers.push_back("The " + noun + " sanctuary opened in " + year + " near " +
                                 place + ".");
        b.qrels.add(q.id, "r" + detail::two_digits(n), 1);
        b.queries.push_back(std::move(q));
    }
    for (std::size_t n = 0; n < 10; ++n) {
        Document d;
        d.id = "x" + detail::two_digits(n);
        d.title = "journal entry" + std::to_string(n);
        d.text = "The weather station logged wind and rain on day " + std::to_string(n) +
                 ". Several surveys mention the coast and the nearby hills.";
        b.corpus.push_back(std::move(d));
    }
    validate_bundle(b);
    return b;
}

}  // namespace hybridir
