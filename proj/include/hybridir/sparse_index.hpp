#pragma once

/** \file sparse_index.hpp
 *  \brief Learned-sparse style term-weight vectors and dot-product retrieval.
 *
 * A sparse vector maps terms to strictly positive weights. The store keeps a
 * forward map (doc id -> vector) and an inverted transpose (term -> postings)
 * that stay consistent by construction; retrieval accumulates dot products
 * over the inverted lists, so documents sharing no term with the query are
 * never materialized, let alone returned.
 *
 * The built-in expander reproduces a tf * idf weighting from corpus
 * statistics. Model-produced expansions plug in through the Expander
 * interface or load from files.
 */

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "analyzer.hpp"
#include "corpus.hpp"
#include "hits.hpp"
#include "lexical_index.hpp"

namespace hybridir {

struct SparseVector {
    std::map<std::string, double> weights;  ///< term -> weight, all > 0 and finite

    std::size_t nonzeros() const { return weights.size(); }

    void validate() const {
        for (const auto& [term, w] : weights) {
            if (term.empty()) throw std::invalid_argument("sparse vector has empty term");
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("sparse weight for '" + term +
                                            "' must be finite and > 0");
            }
        }
    }
};

/// Dot product of two sparse vectors.
inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
    const auto& small = a.weights.size() <= b.weights.size() ? a : b;
    const auto& large = a.weights.size() <= b.weights.size() ? b : a;
    double s = 0.0;
    for (const auto& [term, w] : small.weights) {
        auto it = large.weights.find(term);
        if (it != large.weights.end()) s += w * it->second;
    }
    return s;
}

/// Document-side sparse vectors with an inverted transpose for retrieval.
class SparseStore {
public:
    struct Entry {
        std::uint32_t slot;
        double weight;
    };

    void add(const std::string& doc_id, SparseVector vec) {
        vec.validate();
        if (doc_id.empty()) throw std::invalid_argument("sparse store: empty doc id");
        if (!index_.emplace(doc_id, ids_.size()).second) {
            throw std::invalid_argument("sparse store: duplicate doc id " + doc_id);
        }
        auto slot = static_cast<std::uint32_t>(ids_.size());
        for (const auto& [term, w] : vec.weights) {
            inverted_[term].push_back({slot, w});
            ++total_nonzeros_;
        }
        ids_.push_back(doc_id);
        vecs_.push_back(std::move(vec));
    }

    std::size_t size() const { return ids_.size(); }
    std::size_t total_nonzeros() const { return total_nonzeros_; }
    bool contains(const std::string& doc_id) const { return index_.count(doc_id) != 0; }
    const std::vector<std::string>& ids() const { return ids_; }

    const SparseVector& vector(const std::string& doc_id) const {
        auto it = index_.find(doc_id);
        if (it == index_.end()) throw std::invalid_argument("sparse store: unknown doc id " + doc_id);
        return vecs_[it->second];
    }

    const std::vector<Entry>* inverted(const std::string& term) const {
        auto it = inverted_.find(term);
        return it == inverted_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::vector<Entry>>& inverted_lists() const { return inverted_; }
    const std::string& id_at(std::size_t slot) const { return ids_[slot]; }

private:
    std::vector<std::string> ids_;
    std::vector<SparseVector> vecs_;
    std::map<std::string, std::vector<Entry>> inverted_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t total_nonzeros_ = 0;
};

/** Top-k dot-product search. Only documents with at least one overlapping
 *  term appear; ties break by doc_id ascending.
 */
inline std::vector<ScoredHit> sparse_top_k(const SparseStore& store, const SparseVector& query,
                                           std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    query.validate();
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& [term, qw] : query.weights) {
        const auto* list = store.inverted(term);
        if (list == nullptr) continue;
        for (const auto& e : *list) acc[e.slot] += qw * e.weight;
    }
    std::vector<ScoredHit> hits;
    hits.reserve(acc.size());
    for (const auto& [slot, score] : acc) {
        hits.push_back({store.id_at(slot), score, 0});
    }
    return finalize_hits(std::move(hits), k);
}

/// Produces a sparse expansion of a piece of text.
class Expander {
public:
    virtual ~Expander() = default;
    virtual SparseVector expand(const std::string& text) const = 0;
    virtual std::string tag() const = 0;  ///< short name for reports
};

/// Document frequencies a tf*idf expander needs; field-union semantics.
struct CorpusStats {
    std::size_t doc_count = 0;
    std::map<std::string, std::uint32_t> df;  ///< docs containing the term in any field

    /// Union document frequency across all fields of an index.
    static CorpusStats from_index(const LexicalIndex& index) {
        CorpusStats s;
        s.doc_count = index.doc_count();
        std::map<std::string, std::vector<bool>> seen;
        for (const auto& field : index.fields()) {
            for (const auto& [term, list] : index.terms(field)) {
                auto& mask = seen[term];
                if (mask.empty()) mask.assign(index.doc_count(), false);
                for (const auto& post : list) mask[post.doc] = true;
            }
        }
        for (const auto& [term, mask] : seen) {
            std::uint32_t n = 0;
            for (bool b : mask) n += b ? 1 : 0;
            s.df[term] = n;
        }
        return s;
    }

    double idf(const std::string& term) const {
        auto it = df.find(term);
        const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
        const double n = static_cast<double>(doc_count);
        return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }
};

/** Reference expansion: weight(t) = tf(t in text) * idf(t).
 *
 * Unseen terms get the full unseen-idf weight rather than zero, so novel
 * query words still discriminate. All weights are strictly positive.
 */
inline SparseVector baseline_expand(const std::string& text, const CorpusStats& stats) {
    SparseVector v;
    for (const auto& tok : analyze(text).tokens) v.weights[tok.term] += 1.0;
    for (auto& [term, w] : v.weights) w *= stats.idf(term);
    return v;
}

class TfIdfExpander final : public Expander {
public:
    explicit TfIdfExpander(CorpusStats stats) : stats_(std::move(stats)) {}

    SparseVector expand(const std::string& text) const override {
        return baseline_expand(text, stats_);
    }

    std::string tag() const override { return "tfidf-v1"; }

    const CorpusStats& stats() const { return stats_; }

private:
    CorpusStats stats_;
};

/** Load expansions from a jsonl file of {"id": ..., "weights": {term: w}}.
 *  Weight errors (non-positive, non-finite) carry file and line.
 */
inline SparseStore load_sparse_vectors(const std::string& path) {
    SparseStore store;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& j) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!j.is_object() || !j.contains("id") || !j.contains("weights")) {
            throw std::runtime_error(where + ": expected {\"id\", \"weights\"}");
        }
        if (!j.at("weights").is_object()) {
            throw std::runtime_error(where + ": weights must be an object");
        }
        SparseVector v;
        for (auto it = j.at("weights").begin(); it != j.at("weights").end(); ++it) {
            if (!it.value().is_number()) {
                throw std::runtime_error(where + ": weight for '" + it.key() + "' must be a number");
            }
            v.weights[it.key()] = it.value().get<double>();
        }
        try {
            store.add(j.at("id").get<std::string>(), std::move(v));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    });
    return store;
}

/// Inverse of load_sparse_vectors; ids in insertion order, terms sorted.
inline void save_sparse_vectors(const SparseStore& store, const std::string& path) {
    std::ostringstream out;
    for (const auto& id : store.ids()) {
        nlohmann::json j;
        j["id"] = id;
        j["weights"] = store.vector(id).weights;
        out << j.dump() << '\n';
    }
    detail::write_or_throw(path, out.str());
}

}  // namespace hybridir
