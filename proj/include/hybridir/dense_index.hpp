#pragma once

/** \file dense_index.hpp
 *  \brief Dense vector store with exact cosine-similarity search.
 *
 * Search scans every stored vector, so results are exact: num_candidates is
 * validated and recorded for parity with approximate engines but does not
 * change the outcome. A deterministic feature-hashing embedder (toy_embed)
 * backs tests and synthetic benchmarks; real deployments load vectors from
 * files instead.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "analyzer.hpp"
#include "corpus.hpp"
#include "hits.hpp"

namespace hybridir {

struct DenseVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    void validate() const {
        if (values.empty()) throw std::invalid_argument("dense vector must not be empty");
        for (double v : values) {
            if (!std::isfinite(v)) throw std::invalid_argument("dense vector has non-finite value");
        }
    }
};

struct KnnParams {
    std::uint32_t k = 10;
    std::uint32_t num_candidates = 100;

    void validate() const {
        if (k < 1) throw std::invalid_argument("knn k must be at least 1");
        if (num_candidates < k) {
            throw std::invalid_argument("knn num_candidates must be >= k");
        }
    }
};

inline double dot(const DenseVector& a, const DenseVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dense vector dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

inline double norm(const DenseVector& v) { return std::sqrt(dot(v, v)); }

/// Cosine similarity; zero-norm vectors compare as 0 to every vector.
inline double cosine_similarity(const DenseVector& a, const DenseVector& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

/// Immutable-after-fill store of equal-dimension document vectors.
class DenseStore {
public:
    void add(const std::string& doc_id, DenseVector vec) {
        vec.validate();
        if (doc_id.empty()) throw std::invalid_argument("dense store: empty doc id");
        if (!vecs_.empty() && vec.dim() != dim_) {
            throw std::invalid_argument("dense store: vector for " + doc_id + " has dimension " +
                                        std::to_string(vec.dim()) + ", expected " +
                                        std::to_string(dim_));
        }
        if (!index_.emplace(doc_id, ids_.size()).second) {
            throw std::invalid_argument("dense store: duplicate doc id " + doc_id);
        }
        dim_ = vec.dim();
        ids_.push_back(doc_id);
        norms_.push_back(norm(vec));
        vecs_.push_back(std::move(vec));
    }

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    bool contains(const std::string& doc_id) const { return index_.count(doc_id) != 0; }
    const std::vector<std::string>& ids() const { return ids_; }

    const DenseVector& vector(const std::string& doc_id) const {
        auto it = index_.find(doc_id);
        if (it == index_.end()) throw std::invalid_argument("dense store: unknown doc id " + doc_id);
        return vecs_[it->second];
    }

    /// Cosine similarity of the stored vector against q, by slot.
    double similarity_at(std::size_t slot, const DenseVector& q, double q_norm) const {
        if (q_norm == 0.0 || norms_[slot] == 0.0) return 0.0;
        return dot(vecs_[slot], q) / (norms_[slot] * q_norm);
    }

    const std::string& id_at(std::size_t slot) const { return ids_[slot]; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<DenseVector> vecs_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> index_;
};

/** Exact k-nearest-neighbour search by cosine similarity.
 *
 * Every stored vector is scored; ties break by doc_id ascending. Documents
 * beyond min(k, store size) are dropped.
 */
inline std::vector<ScoredHit> knn_search(const DenseStore& store, const DenseVector& query,
                                         const KnnParams& params = {}) {
    params.validate();
    query.validate();
    if (store.size() > 0 && query.dim() != store.dim()) {
        throw std::invalid_argument("query dimension " + std::to_string(query.dim()) +
                                    " does not match store dimension " +
                                    std::to_string(store.dim()));
    }
    const double q_norm = norm(query);
    std::vector<ScoredHit> hits;
    hits.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        hits.push_back({store.id_at(i), store.similarity_at(i, query, q_norm), 0});
    }
    return finalize_hits(std::move(hits), params.k);
}

/** Deterministic bag-of-words embedding via signed feature hashing.
 *
 * Each analyzed token hashes to one of dim buckets with sign taken from the
 * hash's top bit; the result is L2-normalized (zero stays zero). Purely a
 * test and demo embedder: no semantics, but stable across platforms.
 */
inline DenseVector toy_embed(const std::string& text, std::size_t dim = 64) {
    if (dim < 8) throw std::invalid_argument("toy_embed dimension must be at least 8");
    DenseVector v;
    v.values.assign(dim, 0.0);
    for (const auto& tok : analyze(text).tokens) {
        const std::uint64_t h = detail::fnv1a64(tok.term);
        const auto bucket = static_cast<std::size_t>(h % dim);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v.values[bucket] += sign;
    }
    const double n = norm(v);
    if (n > 0.0) {
        for (auto& x : v.values) x /= n;
    }
    return v;
}

/** Load vectors from a jsonl file of {"id": ..., "vector": [...]} records.
 *  Errors carry file and line: dimension mismatch, non-finite values,
 *  duplicate ids, malformed JSON.
 */
inline DenseStore load_dense_vectors(const std::string& path) {
    DenseStore store;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& j) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!j.is_object() || !j.contains("id") || !j.contains("vector")) {
            throw std::runtime_error(where + ": expected {\"id\", \"vector\"}");
        }
        DenseVector v;
        if (!j.at("vector").is_array()) throw std::runtime_error(where + ": vector must be an array");
        for (const auto& x : j.at("vector")) {
            if (!x.is_number()) throw std::runtime_error(where + ": vector entries must be numbers");
            v.values.push_back(x.get<double>());
        }
        try {
            store.add(j.at("id").get<std::string>(), std::move(v));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    });
    return store;
}

/// Inverse of load_dense_vectors; ids in insertion order.
inline void save_dense_vectors(const DenseStore& store, const std::string& path) {
    std::ostringstream out;
    for (const auto& id : store.ids()) {
        nlohmann::json j;
        j["id"] = id;
        j["vector"] = store.vector(id).values;
        out << j.dump() << '\n';
    }
    detail::write_or_throw(path, out.str());
}

}  // namespace hybridir
