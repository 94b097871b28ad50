#pragma once

/** \file hits.hpp
 *  \brief Scored result lists shared by every retriever.
 */

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace hybridir {

/// One entry of a ranked result list.
struct ScoredHit {
    std::string doc_id;
    double score = 0.0;
    std::uint32_t rank = 0;  ///< 1-based, assigned after sorting
};

/// Orders by score descending, breaking ties by doc_id ascending.
inline bool hit_order(const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/** Sort candidates, truncate to k and assign 1-based ranks.
 *
 * The tie rule (score descending, doc_id ascending) makes result lists
 * deterministic regardless of candidate generation order.
 */
inline std::vector<ScoredHit> finalize_hits(std::vector<ScoredHit> hits, std::size_t k) {
    std::sort(hits.begin(), hits.end(), hit_order);
    if (hits.size() > k) hits.resize(k);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        hits[i].rank = static_cast<std::uint32_t>(i + 1);
    }
    return hits;
}

}  // namespace hybridir
