#pragma once

/** \file query_engine.hpp
 *  \brief Multi-field query semantics, hybrid blending and retriever specs.
 *
 * Multi-match types over a positional index:
 *   - match_single:  BM25 over exactly one field.
 *   - best_fields:   per-field BM25; best + tie_breaker * (sum of others).
 *   - most_fields:   sum of per-field BM25 scores.
 *   - cross_fields:  per term, idf from the max df across fields, saturation
 *                    per field with that field's length norm, best field per
 *                    term, summed over terms.
 *   - phrase_prefix: consecutive-position phrase with the last term matched
 *                    as a prefix; tf = occurrence count, df = min constituent
 *                    df (prefix df = union of docs over matching terms);
 *                    scored per field, best field wins.
 *   - bool_prefix:   every term scored as an ordinary match except the last,
 *                    which matches as a prefix (tf = summed tf of matching
 *                    terms, df = union doc count); summed over fields.
 *
 * In every mode a document appears in the hit list exactly when its score is
 * strictly positive.
 *
 * Hybrid blending combines a lexical ranking with a semantic one:
 *   combined(d) = semantic_boost * semantic(d) + lexical(d)
 * where a side that did not return d contributes zero. With
 * require_lexical_match set, only lexically matching documents are eligible
 * (the must/should query shape); otherwise candidates are the union of both
 * hit lists.
 */

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "analyzer.hpp"
#include "dense_index.hpp"
#include "hits.hpp"
#include "lexical_index.hpp"
#include "sparse_index.hpp"

namespace hybridir {

enum class MultiMatchType {
    match_single,
    best_fields,
    most_fields,
    cross_fields,
    phrase_prefix,
    bool_prefix,
};

inline std::string to_string(MultiMatchType t) {
    switch (t) {
        case MultiMatchType::match_single: return "match_single";
        case MultiMatchType::best_fields: return "best_fields";
        case MultiMatchType::most_fields: return "most_fields";
        case MultiMatchType::cross_fields: return "cross_fields";
        case MultiMatchType::phrase_prefix: return "phrase_prefix";
        case MultiMatchType::bool_prefix: return "bool_prefix";
    }
    throw std::logic_error("unreachable");
}

inline MultiMatchType multi_match_type_from_string(const std::string& s) {
    if (s == "match_single" || s == "match") return MultiMatchType::match_single;
    if (s == "best_fields") return MultiMatchType::best_fields;
    if (s == "most_fields") return MultiMatchType::most_fields;
    if (s == "cross_fields") return MultiMatchType::cross_fields;
    if (s == "phrase_prefix") return MultiMatchType::phrase_prefix;
    if (s == "bool_prefix") return MultiMatchType::bool_prefix;
    throw std::invalid_argument("unknown multi_match type '" + s + "'");
}

/** A prepared multi-field query against one index.
 *
 * Prefix tables for the *_prefix types are built once at construction, so
 * scoring one document and ranking a corpus share the same arithmetic path.
 */
class MultiMatchQuery {
public:
    MultiMatchQuery(const LexicalIndex& index, MultiMatchType type,
                    const std::vector<std::string>& fields, const std::string& query,
                    const Bm25Params& params = {}, double tie_breaker = 0.0)
        : index_(index), type_(type), fields_(fields), params_(params),
          tie_breaker_(tie_breaker) {
        params_.validate();
        if (fields_.empty()) throw std::invalid_argument("multi_match requires at least one field");
        std::set<std::string> seen;
        for (const auto& f : fields_) {
            if (!index_.has_field(f)) throw std::invalid_argument("unknown field '" + f + "'");
            if (!seen.insert(f).second) throw std::invalid_argument("duplicate field '" + f + "'");
        }
        if (type_ == MultiMatchType::match_single && fields_.size() != 1) {
            throw std::invalid_argument("match_single takes exactly one field");
        }
        if (!(tie_breaker_ >= 0.0 && tie_breaker_ <= 1.0)) {
            throw std::invalid_argument("tie_breaker must lie in [0, 1]");
        }
        terms_ = analyze(query).terms();
        if (terms_.empty()) {
            throw std::invalid_argument("query analyzes to no terms: '" + query + "'");
        }
        if (type_ == MultiMatchType::phrase_prefix || type_ == MultiMatchType::bool_prefix) {
            for (const auto& f : fields_) build_prefix_table(f);
        }
    }

    const std::vector<std::string>& terms() const { return terms_; }

    /// Score one document; strictly positive iff the document matches.
    double score(std::uint32_t ord) const {
        if (ord >= index_.doc_count()) throw std::invalid_argument("document ordinal out of range");
        switch (type_) {
            case MultiMatchType::match_single:
                return bm25_score_terms(index_, fields_[0], terms_, ord, params_);
            case MultiMatchType::best_fields: {
                double best = 0.0, total = 0.0;
                for (const auto& f : fields_) {
                    double s = bm25_score_terms(index_, f, terms_, ord, params_);
                    best = std::max(best, s);
                    total += s;
                }
                return best + tie_breaker_ * (total - best);
            }
            case MultiMatchType::most_fields: {
                double total = 0.0;
                for (const auto& f : fields_) {
                    total += bm25_score_terms(index_, f, terms_, ord, params_);
                }
                return total;
            }
            case MultiMatchType::cross_fields: return cross_fields_score(ord);
            case MultiMatchType::phrase_prefix: {
                double best = 0.0;
                for (const auto& f : fields_) best = std::max(best, phrase_field_score(f, ord));
                return best;
            }
            case MultiMatchType::bool_prefix: {
                double total = 0.0;
                for (const auto& f : fields_) total += bool_field_score(f, ord);
                return total;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// Ordinals that can possibly score above zero (a cheap superset for the
    /// phrase type, exact for the others).
    std::vector<std::uint32_t> candidate_ordinals() const {
        std::set<std::uint32_t> out;
        auto add_term_docs = [&](const std::string& field, const std::string& term) {
            const auto* list = index_.postings(field, term);
            if (list == nullptr) return;
            for (const auto& post : *list) out.insert(post.doc);
        };
        switch (type_) {
            case MultiMatchType::match_single:
            case MultiMatchType::best_fields:
            case MultiMatchType::most_fields:
            case MultiMatchType::cross_fields:
                for (const auto& f : fields_) {
                    for (const auto& t : terms_) add_term_docs(f, t);
                }
                break;
            case MultiMatchType::phrase_prefix:
                for (const auto& f : fields_) {
                    if (terms_.size() == 1) {
                        for (const auto& [doc, m] : prefix_.at(f).by_doc) out.insert(doc);
                    } else {
                        add_term_docs(f, terms_.front());
                    }
                }
                break;
            case MultiMatchType::bool_prefix:
                for (const auto& f : fields_) {
                    for (std::size_t i = 0; i + 1 < terms_.size(); ++i) add_term_docs(f, terms_[i]);
                    for (const auto& [doc, m] : prefix_.at(f).by_doc) out.insert(doc);
                }
                break;
        }
        return {out.begin(), out.end()};
    }

private:
    struct PrefixMatches {
        struct DocMatch {
            std::uint32_t tf = 0;                  ///< summed tf over matching terms
            std::vector<std::uint32_t> positions;  ///< sorted union of positions
        };
        std::map<std::uint32_t, DocMatch> by_doc;
        std::size_t df = 0;  ///< distinct docs containing any matching term
    };

    void build_prefix_table(const std::string& field) {
        PrefixMatches pm;
        index_.for_each_term_with_prefix(field, terms_.back(),
                                         [&](const std::string&, const LexicalIndex::PostingList& list) {
                                             for (const auto& post : list) {
                                                 auto& m = pm.by_doc[post.doc];
                                                 m.tf += post.tf;
                                                 m.positions.insert(m.positions.end(),
                                                                    post.positions.begin(),
                                                                    post.positions.end());
                                             }
                                         });
        for (auto& [doc, m] : pm.by_doc) {
            std::sort(m.positions.begin(), m.positions.end());
            m.positions.erase(std::unique(m.positions.begin(), m.positions.end()),
                              m.positions.end());
        }
        pm.df = pm.by_doc.size();
        prefix_.emplace(field, std::move(pm));
    }

    double cross_fields_score(std::uint32_t ord) const {
        double total = 0.0;
        for (const auto& term : terms_) {
            std::size_t df_star = 0;
            for (const auto& f : fields_) df_star = std::max(df_star, index_.df(f, term));
            if (df_star == 0) continue;
            const double idf = index_.idf(df_star);
            double best = 0.0;
            for (const auto& f : fields_) {
                const auto* list = index_.postings(f, term);
                if (list == nullptr) continue;
                const auto* post = detail::find_posting(*list, ord);
                if (post == nullptr) continue;
                best = std::max(best, idf * index_.saturation(f, post->tf, ord, params_));
            }
            total += best;
        }
        return total;
    }

    double phrase_field_score(const std::string& field, std::uint32_t ord) const {
        const auto& pm = prefix_.at(field);
        auto pit = pm.by_doc.find(ord);
        std::uint32_t tf = 0;
        std::size_t df = 0;
        const std::size_t n = terms_.size();
        if (n == 1) {
            if (pit == pm.by_doc.end()) return 0.0;
            tf = pit->second.tf;
            df = pm.df;
        } else {
            if (pit == pm.by_doc.end()) return 0.0;
            std::vector<const std::vector<std::uint32_t>*> positions(n - 1);
            df = pm.df;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto* list = index_.postings(field, terms_[i]);
                if (list == nullptr) return 0.0;
                const auto* post = detail::find_posting(*list, ord);
                if (post == nullptr) return 0.0;
                positions[i] = &post->positions;
                df = std::min(df, list->size());
            }
            const auto& last = pit->second.positions;
            for (auto p : *positions[0]) {
                bool ok = true;
                for (std::size_t i = 1; ok && i + 1 < n; ++i) {
                    ok = std::binary_search(positions[i]->begin(), positions[i]->end(),
                                            p + static_cast<std::uint32_t>(i));
                }
                ok = ok && std::binary_search(last.begin(), last.end(),
                                              p + static_cast<std::uint32_t>(n - 1));
                if (ok) ++tf;
            }
            if (tf == 0) return 0.0;
        }
        return index_.idf(df) * index_.saturation(field, tf, ord, params_);
    }

    double bool_field_score(const std::string& field, std::uint32_t ord) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < terms_.size(); ++i) {
            const auto* list = index_.postings(field, terms_[i]);
            if (list == nullptr) continue;
            const auto* post = detail::find_posting(*list, ord);
            if (post == nullptr) continue;
            s += index_.idf(list->size()) * index_.saturation(field, post->tf, ord, params_);
        }
        const auto& pm = prefix_.at(field);
        auto pit = pm.by_doc.find(ord);
        if (pit != pm.by_doc.end() && pit->second.tf > 0) {
            s += index_.idf(pm.df) * index_.saturation(field, pit->second.tf, ord, params_);
        }
        return s;
    }

    const LexicalIndex& index_;
    MultiMatchType type_;
    std::vector<std::string> fields_;
    Bm25Params params_;
    double tie_breaker_;
    std::vector<std::string> terms_;
    std::map<std::string, PrefixMatches> prefix_;
};

/// Score one document under a multi-field query. Errors on unknown fields and
/// on queries that analyze to nothing.
inline double multi_match_score(const LexicalIndex& index, MultiMatchType type,
                                const std::vector<std::string>& fields, const std::string& query,
                                std::uint32_t ord, const Bm25Params& params = {},
                                double tie_breaker = 0.0) {
    return MultiMatchQuery(index, type, fields, query, params, tie_breaker).score(ord);
}

/// Rank the corpus under a multi-field query; top k by (score desc, id asc).
inline std::vector<ScoredHit> multi_match_top_k(const LexicalIndex& index, MultiMatchType type,
                                                const std::vector<std::string>& fields,
                                                const std::string& query, std::size_t k,
                                                const Bm25Params& params = {},
                                                double tie_breaker = 0.0) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    MultiMatchQuery q(index, type, fields, query, params, tie_breaker);
    std::vector<ScoredHit> hits;
    for (auto ord : q.candidate_ordinals()) {
        double s = q.score(ord);
        if (s > 0.0) hits.push_back({index.doc_id(ord), s, 0});
    }
    return finalize_hits(std::move(hits), k);
}

/// How a lexical ranking and a semantic ranking combine.
struct BlendParams {
    double semantic_boost = 1.0;
    KnnParams knn{};
    bool require_lexical_match = false;

    void validate() const {
        if (!(semantic_boost >= 0.0) || !std::isfinite(semantic_boost)) {
            throw std::invalid_argument("semantic_boost must be finite and >= 0");
        }
        knn.validate();
    }
};

/// Defaults used when a hybrid spec omits blend settings.
inline BlendParams dense_blend_defaults() {
    BlendParams p;
    p.semantic_boost = 0.1;
    p.knn = {10, 100};
    p.require_lexical_match = false;
    return p;
}

inline BlendParams sparse_blend_defaults() {
    BlendParams p;
    p.semantic_boost = 1.0;
    p.require_lexical_match = true;
    return p;
}

/** Blend two hit lists into one ranking of at most k documents.
 *
 * combined = semantic_boost * semantic + lexical, absent sides scoring zero.
 * With require_lexical_match only documents present in the lexical list are
 * candidates; otherwise the union of both lists is.
 */
inline std::vector<ScoredHit> blend_hits(const std::vector<ScoredHit>& lexical,
                                         const std::vector<ScoredHit>& semantic,
                                         const BlendParams& params, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    params.validate();
    std::map<std::string, double> lex;
    for (const auto& h : lexical) lex.emplace(h.doc_id, h.score);
    std::map<std::string, double> sem;
    for (const auto& h : semantic) sem.emplace(h.doc_id, h.score);

    std::vector<ScoredHit> out;
    auto combined = [&](const std::string& id) {
        auto lit = lex.find(id);
        auto sit = sem.find(id);
        const double l = lit == lex.end() ? 0.0 : lit->second;
        const double s = sit == sem.end() ? 0.0 : sit->second;
        return params.semantic_boost * s + l;
    };
    if (params.require_lexical_match) {
        for (const auto& [id, score] : lex) out.push_back({id, combined(id), 0});
    } else {
        std::set<std::string> ids;
        for (const auto& [id, score] : lex) ids.insert(id);
        for (const auto& [id, score] : sem) ids.insert(id);
        for (const auto& id : ids) out.push_back({id, combined(id), 0});
    }
    return finalize_hits(std::move(out), k);
}

enum class IndexKind { bm25, dense, sparse };

inline std::string to_string(IndexKind k) {
    switch (k) {
        case IndexKind::bm25: return "bm25";
        case IndexKind::dense: return "dense";
        case IndexKind::sparse: return "sparse";
    }
    throw std::logic_error("unreachable");
}

inline IndexKind index_kind_from_string(const std::string& s) {
    if (s == "bm25" || s == "lexical") return IndexKind::bm25;
    if (s == "dense" || s == "knn") return IndexKind::dense;
    if (s == "sparse") return IndexKind::sparse;
    throw std::invalid_argument("unknown index kind '" + s + "'");
}

/** Complete description of one retriever configuration. */
struct RetrieverSpec {
    IndexKind kind = IndexKind::bm25;
    MultiMatchType type = MultiMatchType::match_single;
    std::vector<std::string> fields{"text"};
    double tie_breaker = 0.0;
    std::optional<BlendParams> blend;  ///< present exactly when kind != bm25

    std::string name() const { return to_string(kind) + "-" + to_string(type); }

    void validate() const {
        if (fields.empty()) throw std::invalid_argument("retriever spec has no fields");
        if (!(tie_breaker >= 0.0 && tie_breaker <= 1.0)) {
            throw std::invalid_argument("tie_breaker must lie in [0, 1]");
        }
        if (kind == IndexKind::bm25 && blend.has_value()) {
            throw std::invalid_argument("bm25 spec must not carry blend parameters");
        }
        if (kind != IndexKind::bm25) {
            if (!blend.has_value()) {
                throw std::invalid_argument("hybrid spec requires blend parameters");
            }
            blend->validate();
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = to_string(kind);
        j["type"] = to_string(type);
        j["fields"] = fields;
        j["tie_breaker"] = tie_breaker;
        if (blend.has_value()) {
            j["boost"] = blend->semantic_boost;
            j["k"] = blend->knn.k;
            j["num_candidates"] = blend->knn.num_candidates;
            j["require_lexical_match"] = blend->require_lexical_match;
        }
        return j;
    }

    /// Parse the flat JSON form; hybrid kinds get blend defaults for omitted keys.
    static RetrieverSpec from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw std::invalid_argument("retriever spec must be an object");
        static const std::set<std::string> known = {
            "kind", "type", "fields", "tie_breaker", "boost", "k", "num_candidates",
            "require_lexical_match"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!known.count(it.key())) {
                throw std::invalid_argument("retriever spec has unknown key '" + it.key() + "'");
            }
        }
        RetrieverSpec spec;
        spec.kind = index_kind_from_string(j.value("kind", "bm25"));
        spec.type = multi_match_type_from_string(j.value("type", "match_single"));
        if (j.contains("fields")) {
            spec.fields = j.at("fields").get<std::vector<std::string>>();
        }
        spec.tie_breaker = j.value("tie_breaker", 0.0);
        if (spec.kind != IndexKind::bm25) {
            BlendParams p = spec.kind == IndexKind::dense ? dense_blend_defaults()
                                                          : sparse_blend_defaults();
            if (j.contains("boost")) p.semantic_boost = j.at("boost").get<double>();
            if (j.contains("k")) p.knn.k = j.at("k").get<std::uint32_t>();
            if (j.contains("num_candidates")) {
                p.knn.num_candidates = j.at("num_candidates").get<std::uint32_t>();
            }
            if (p.knn.num_candidates < p.knn.k) p.knn.num_candidates = p.knn.k;
            if (j.contains("require_lexical_match")) {
                p.require_lexical_match = j.at("require_lexical_match").get<bool>();
            }
            spec.blend = p;
        } else if (j.contains("boost") || j.contains("k") || j.contains("num_candidates") ||
                   j.contains("require_lexical_match")) {
            throw std::invalid_argument("bm25 spec must not carry blend keys");
        }
        spec.validate();
        return spec;
    }
};

/** The six standard benchmark configurations, in fixed report order:
 *  lexical, dense hybrid and sparse hybrid, each with a single-field query
 *  (text) and a field-aware query (title + text, best_fields).
 */
inline std::vector<RetrieverSpec> sextet_presets() {
    BlendParams dense_blend;
    dense_blend.semantic_boost = 0.1;
    dense_blend.knn = {10, 100};
    dense_blend.require_lexical_match = false;

    BlendParams sparse_blend;
    sparse_blend.semantic_boost = 0.1;
    sparse_blend.knn = {10, 100};
    sparse_blend.require_lexical_match = true;

    const std::vector<std::string> mq{"text"};
    const std::vector<std::string> bf{"title", "text"};

    std::vector<RetrieverSpec> out;
    out.push_back({IndexKind::bm25, MultiMatchType::match_single, mq, 0.0, std::nullopt});
    out.push_back({IndexKind::bm25, MultiMatchType::best_fields, bf, 0.0, std::nullopt});
    out.push_back({IndexKind::dense, MultiMatchType::match_single, mq, 0.0, dense_blend});
    out.push_back({IndexKind::dense, MultiMatchType::best_fields, bf, 0.0, dense_blend});
    out.push_back({IndexKind::sparse, MultiMatchType::match_single, mq, 0.0, sparse_blend});
    out.push_back({IndexKind::sparse, MultiMatchType::best_fields, bf, 0.0, sparse_blend});
    return out;
}

/** Everything a retriever may need at query time. Pointers are non-owning;
 *  only the pieces a given spec uses must be present.
 */
struct SearchContext {
    const LexicalIndex* lexical = nullptr;
    const DenseStore* dense = nullptr;
    const SparseStore* sparse = nullptr;
    std::function<DenseVector(const std::string&)> embed_query;  ///< text -> vector
    const Expander* expander = nullptr;
    /// Pre-computed per-query vectors and expansions, keyed by query id.
    const std::unordered_map<std::string, DenseVector>* query_vectors = nullptr;
    const std::unordered_map<std::string, SparseVector>* query_expansions = nullptr;
    Bm25Params bm25{};
};

namespace detail {

inline DenseVector query_vector_for(const SearchContext& ctx, const std::string& query,
                                    const std::string& query_id, const std::string& spec_name) {
    if (ctx.query_vectors != nullptr && !query_id.empty()) {
        auto it = ctx.query_vectors->find(query_id);
        if (it != ctx.query_vectors->end()) return it->second;
    }
    if (ctx.embed_query) return ctx.embed_query(query);
    throw std::runtime_error("retriever '" + spec_name +
                             "' has no query embedder and no stored vector for query '" +
                             query_id + "'");
}

inline SparseVector query_expansion_for(const SearchContext& ctx, const std::string& query,
                                        const std::string& query_id,
                                        const std::string& spec_name) {
    if (ctx.query_expansions != nullptr && !query_id.empty()) {
        auto it = ctx.query_expansions->find(query_id);
        if (it != ctx.query_expansions->end()) return it->second;
    }
    if (ctx.expander != nullptr) return ctx.expander->expand(query);
    throw std::runtime_error("retriever '" + spec_name +
                             "' has no expander and no stored expansion for query '" +
                             query_id + "'");
}

}  // namespace detail

/** Run one retriever spec end to end for a single query.
 *
 * Hybrid kinds rank the full lexical candidate set, fetch the semantic side
 * (nearest neighbours widened to at least k, or every overlapping sparse
 * doc), blend, and cut to k. query_id keys optional pre-computed vectors.
 */
inline std::vector<ScoredHit> execute_retriever(const RetrieverSpec& spec,
                                                const SearchContext& ctx,
                                                const std::string& query, std::size_t k,
                                                const std::string& query_id = "") {
    spec.validate();
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (ctx.lexical == nullptr) {
        throw std::runtime_error("retriever '" + spec.name() + "' needs a lexical index");
    }
    const std::size_t full = std::max<std::size_t>(k, std::max<std::size_t>(
                                                          ctx.lexical->doc_count(), 1));
    switch (spec.kind) {
        case IndexKind::bm25:
            return multi_match_top_k(*ctx.lexical, spec.type, spec.fields, query, k, ctx.bm25,
                                     spec.tie_breaker);
        case IndexKind::dense: {
            if (ctx.dense == nullptr) {
                throw std::runtime_error("retriever '" + spec.name() +
                                         "' needs a dense vector store");
            }
            auto qv = detail::query_vector_for(ctx, query, query_id, spec.name());
            KnnParams kp = spec.blend->knn;
            kp.k = std::max<std::uint32_t>(kp.k, static_cast<std::uint32_t>(k));
            kp.num_candidates = std::max(kp.num_candidates, kp.k);
            auto semantic = knn_search(*ctx.dense, qv, kp);
            auto lexical = multi_match_top_k(*ctx.lexical, spec.type, spec.fields, query, full,
                                             ctx.bm25, spec.tie_breaker);
            return blend_hits(lexical, semantic, *spec.blend, k);
        }
        case IndexKind::sparse: {
            if (ctx.sparse == nullptr) {
                throw std::runtime_error("retriever '" + spec.name() +
                                         "' needs a sparse vector store");
            }
            auto qe = detail::query_expansion_for(ctx, query, query_id, spec.name());
            const std::size_t all = std::max<std::size_t>(std::max(ctx.sparse->size(), k), 1);
            auto semantic = sparse_top_k(*ctx.sparse, qe, all);
            auto lexical = multi_match_top_k(*ctx.lexical, spec.type, spec.fields, query, full,
                                             ctx.bm25, spec.tie_breaker);
            return blend_hits(lexical, semantic, *spec.blend, k);
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace hybridir
