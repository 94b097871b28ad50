#pragma once

/** \file metrics.hpp
 *  \brief Retrieval and answer-quality metrics.
 *
 * Ranking metrics take one ranked run per query plus graded judgments.
 * Queries with no judged-relevant document at the chosen threshold are
 * excluded from accuracy and precision denominators; queries with a zero
 * ideal DCG are excluded from NDCG. Gains clamp negative grades to zero, so
 * judged-irrelevant documents (grade -1) neither help nor hurt.
 *
 * Answer metrics follow the usual reading-comprehension convention:
 * normalize (lowercase, strip ASCII punctuation, drop the articles a/an/the,
 * collapse whitespace), then exact string match and token-multiset F1, each
 * taken as the best over the gold answers.
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "hits.hpp"

namespace hybridir {

/// The ranked hits one retriever produced for one query.
struct RankedRun {
    std::string query_id;
    std::vector<ScoredHit> hits;
};

/** Fraction of judgeable queries whose top k contains at least one document
 *  judged at or above threshold. Queries without any such judged document do
 *  not count toward the denominator.
 */
inline double top_k_accuracy(const std::vector<RankedRun>& runs, const RelevanceJudgments& qrels,
                             std::size_t k, int threshold = 1) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    std::size_t denom = 0, hits = 0;
    for (const auto& run : runs) {
        const auto& judged = qrels.for_query(run.query_id);
        bool has_relevant = false;
        for (const auto& [doc, grade] : judged) has_relevant = has_relevant || grade >= threshold;
        if (!has_relevant) continue;
        ++denom;
        const std::size_t limit = std::min(k, run.hits.size());
        for (std::size_t i = 0; i < limit; ++i) {
            auto it = judged.find(run.hits[i].doc_id);
            if (it != judged.end() && it->second >= threshold) {
                ++hits;
                break;
            }
        }
    }
    return denom == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(denom);
}

/// Mean over judgeable queries of (relevant docs in top k) / k.
inline double precision_at_k(const std::vector<RankedRun>& runs, const RelevanceJudgments& qrels,
                             std::size_t k, int threshold = 1) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    std::size_t denom = 0;
    double total = 0.0;
    for (const auto& run : runs) {
        const auto& judged = qrels.for_query(run.query_id);
        bool has_relevant = false;
        for (const auto& [doc, grade] : judged) has_relevant = has_relevant || grade >= threshold;
        if (!has_relevant) continue;
        ++denom;
        std::size_t rel = 0;
        const std::size_t limit = std::min(k, run.hits.size());
        for (std::size_t i = 0; i < limit; ++i) {
            auto it = judged.find(run.hits[i].doc_id);
            if (it != judged.end() && it->second >= threshold) ++rel;
        }
        total += static_cast<double>(rel) / static_cast<double>(k);
    }
    return denom == 0 ? 0.0 : total / static_cast<double>(denom);
}

namespace detail {

inline double ndcg_gain(int grade, bool exponential) {
    const double g = grade < 0 ? 0.0 : static_cast<double>(grade);
    return exponential ? std::exp2(g) - 1.0 : g;
}

}  // namespace detail

/** Mean NDCG at the cutoff. Gains are raw grades clamped at zero (or
 *  2^grade - 1 with exponential set), discount log2(rank + 1), ideal DCG from
 *  the judged documents alone. Queries whose ideal DCG is zero are excluded;
 *  the mean over an empty set is zero.
 */
inline double ndcg_at_k(const std::vector<RankedRun>& runs, const RelevanceJudgments& qrels,
                        std::size_t cutoff, bool exponential_gain = false) {
    if (cutoff < 1) throw std::invalid_argument("cutoff must be at least 1");
    std::size_t counted = 0;
    double total = 0.0;
    for (const auto& run : runs) {
        const auto& judged = qrels.for_query(run.query_id);
        std::vector<double> ideal_gains;
        for (const auto& [doc, grade] : judged) {
            ideal_gains.push_back(detail::ndcg_gain(grade, exponential_gain));
        }
        std::sort(ideal_gains.rbegin(), ideal_gains.rend());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(cutoff, ideal_gains.size()); ++i) {
            idcg += ideal_gains[i] / std::log2(static_cast<double>(i + 2));
        }
        if (idcg == 0.0) continue;
        double dcg = 0.0;
        const std::size_t limit = std::min(cutoff, run.hits.size());
        for (std::size_t i = 0; i < limit; ++i) {
            auto it = judged.find(run.hits[i].doc_id);
            const int grade = it == judged.end() ? 0 : it->second;
            dcg += detail::ndcg_gain(grade, exponential_gain) /
                   std::log2(static_cast<double>(i + 2));
        }
        total += dcg / idcg;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

/** Normalize an answer string: lowercase, strip ASCII punctuation, drop the
 *  articles a/an/the, collapse runs of whitespace to single spaces.
 */
inline std::string normalize_answer(const std::string& s) {
    std::string stripped;
    stripped.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80 && std::ispunct(c)) continue;
        stripped.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 0x20)
                                                : static_cast<char>(c));
    }
    std::string out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        if (word != "a" && word != "an" && word != "the") {
            if (!out.empty()) out.push_back(' ');
            out += word;
        }
        word.clear();
    };
    for (unsigned char c : stripped) {
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else {
            word.push_back(static_cast<char>(c));
        }
    }
    flush();
    return out;
}

namespace detail {

inline std::vector<std::string> answer_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string norm = normalize_answer(s);
    std::size_t start = 0;
    while (start < norm.size()) {
        auto pos = norm.find(' ', start);
        if (pos == std::string::npos) pos = norm.size();
        out.push_back(norm.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// 1 when the normalized prediction equals any normalized gold, else 0.
inline int exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("exact_match requires at least one gold answer");
    const std::string p = normalize_answer(prediction);
    for (const auto& g : golds) {
        if (p == normalize_answer(g)) return 1;
    }
    return 0;
}

/** Best token-level F1 over the gold answers, using multiset overlap of
 *  normalized tokens. Both sides empty scores 1; exactly one empty scores 0.
 */
inline double token_f1(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("token_f1 requires at least one gold answer");
    const auto pred = detail::answer_tokens(prediction);
    double best = 0.0;
    for (const auto& g : golds) {
        const auto gold = detail::answer_tokens(g);
        if (pred.empty() && gold.empty()) {
            best = std::max(best, 1.0);
            continue;
        }
        if (pred.empty() || gold.empty()) continue;  // this pair scores 0
        std::map<std::string, std::size_t> counts;
        for (const auto& t : gold) ++counts[t];
        std::size_t overlap = 0;
        for (const auto& t : pred) {
            auto it = counts.find(t);
            if (it != counts.end() && it->second > 0) {
                --it->second;
                ++overlap;
            }
        }
        if (overlap == 0) continue;
        const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
        const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

}  // namespace hybridir
