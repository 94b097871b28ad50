#pragma once

/** \file lexical_index.hpp
 *  \brief Positional inverted index over document fields plus BM25 scoring.
 *
 * The index is immutable after build(). Scores follow the widely used
 * nonnegative BM25 variant:
 *
 *   idf(t)       = ln(1 + (N - df + 0.5) / (df + 0.5))
 *   sat(tf, len) = tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))
 *   score(q, d)  = sum over query term occurrences of idf(t) * sat(tf, len)
 *
 * A term repeated in the query contributes once per occurrence. Documents
 * score strictly above zero exactly when they contain at least one query
 * term, so hit lists and the "appears in results" predicate coincide.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "analyzer.hpp"
#include "corpus.hpp"
#include "hits.hpp"

namespace hybridir {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const {
        if (!(k1 >= 0.0) || !std::isfinite(k1)) {
            throw std::invalid_argument("bm25 k1 must be finite and >= 0");
        }
        if (!(b >= 0.0 && b <= 1.0)) {
            throw std::invalid_argument("bm25 b must lie in [0, 1]");
        }
    }
};

class LexicalIndex {
public:
    struct Posting {
        std::uint32_t doc;  ///< document ordinal
        std::uint32_t tf;
        std::vector<std::uint32_t> positions;  ///< ascending token positions
    };
    using PostingList = std::vector<Posting>;
    using TermMap = std::map<std::string, PostingList>;

    /// Index the given fields of every document. Field names must name
    /// Document members ("title" or "text"); duplicates and empty lists are errors.
    static LexicalIndex build(const std::vector<Document>& corpus,
                              const std::vector<std::string>& fields) {
        if (fields.empty()) throw std::invalid_argument("index fields must not be empty");
        LexicalIndex idx;
        for (const auto& f : fields) {
            if (f != "title" && f != "text") {
                throw std::invalid_argument("unknown document field '" + f + "'");
            }
            if (idx.fields_.count(f)) throw std::invalid_argument("duplicate index field '" + f + "'");
            idx.field_names_.push_back(f);
            idx.fields_.emplace(f, FieldData{});
        }
        idx.doc_ids_.reserve(corpus.size());
        for (const auto& d : corpus) {
            auto ord = static_cast<std::uint32_t>(idx.doc_ids_.size());
            if (!idx.ordinals_.emplace(d.id, ord).second) {
                throw std::invalid_argument("duplicate document id " + d.id);
            }
            idx.doc_ids_.push_back(d.id);
            for (const auto& f : idx.field_names_) {
                auto& fd = idx.fields_.at(f);
                const std::string& raw = (f == "title") ? d.title : d.text;
                auto analyzed = analyze(raw);
                fd.lengths.push_back(static_cast<std::uint32_t>(analyzed.length()));
                fd.total_length += analyzed.length();
                for (const auto& tok : analyzed.tokens) {
                    auto& list = fd.postings[tok.term];
                    if (list.empty() || list.back().doc != ord) {
                        list.push_back({ord, 0, {}});
                    }
                    list.back().tf += 1;
                    list.back().positions.push_back(tok.position);
                }
            }
        }
        for (auto& [name, fd] : idx.fields_) {
            fd.avg_length = idx.doc_ids_.empty()
                                ? 0.0
                                : static_cast<double>(fd.total_length) /
                                      static_cast<double>(idx.doc_ids_.size());
        }
        return idx;
    }

    std::size_t doc_count() const { return doc_ids_.size(); }
    const std::vector<std::string>& fields() const { return field_names_; }
    bool has_field(const std::string& f) const { return fields_.count(f) != 0; }

    const std::string& doc_id(std::uint32_t ord) const {
        if (ord >= doc_ids_.size()) throw std::invalid_argument("document ordinal out of range");
        return doc_ids_[ord];
    }

    std::optional<std::uint32_t> ordinal(const std::string& id) const {
        auto it = ordinals_.find(id);
        if (it == ordinals_.end()) return std::nullopt;
        return it->second;
    }

    /// nullptr when the term does not occur in the field.
    const PostingList* postings(const std::string& field, const std::string& term) const {
        const auto& fd = field_data(field);
        auto it = fd.postings.find(term);
        return it == fd.postings.end() ? nullptr : &it->second;
    }

    std::size_t df(const std::string& field, const std::string& term) const {
        const auto* list = postings(field, term);
        return list == nullptr ? 0 : list->size();
    }

    std::uint32_t doc_length(const std::string& field, std::uint32_t ord) const {
        const auto& fd = field_data(field);
        if (ord >= fd.lengths.size()) throw std::invalid_argument("document ordinal out of range");
        return fd.lengths[ord];
    }

    double avg_length(const std::string& field) const { return field_data(field).avg_length; }

    const TermMap& terms(const std::string& field) const { return field_data(field).postings; }

    /// Visit every (term, postings) whose term starts with prefix, in term order.
    template <typename Fn>
    void for_each_term_with_prefix(const std::string& field, const std::string& prefix,
                                   Fn&& fn) const {
        const auto& fd = field_data(field);
        for (auto it = fd.postings.lower_bound(prefix); it != fd.postings.end(); ++it) {
            std::string_view term = it->first;
            if (term.size() < prefix.size() || term.compare(0, prefix.size(), prefix) != 0) break;
            fn(it->first, it->second);
        }
    }

    /// Inverse-document-frequency of a raw df under this index's size.
    double idf(std::size_t doc_freq) const {
        const double n = static_cast<double>(doc_count());
        const double df = static_cast<double>(doc_freq);
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    /// Term-frequency saturation with this field's length normalization.
    double saturation(const std::string& field, std::uint32_t tf, std::uint32_t ord,
                      const Bm25Params& p) const {
        const auto& fd = field_data(field);
        const double len = static_cast<double>(fd.lengths.at(ord));
        const double ratio = fd.avg_length > 0.0 ? len / fd.avg_length : 0.0;
        const double t = static_cast<double>(tf);
        return t * (p.k1 + 1.0) / (t + p.k1 * (1.0 - p.b + p.b * ratio));
    }

    // --- persistence -------------------------------------------------------

    /// Line-delimited JSON dump; format version checked on load.
    void save(const std::string& path) const {
        std::ostringstream out;
        nlohmann::json header;
        header["format"] = format_name;
        header["version"] = format_version;
        header["fields"] = field_names_;
        header["doc_count"] = doc_ids_.size();
        out << header.dump() << '\n';
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
            nlohmann::json j;
            j["d"] = i;
            j["id"] = doc_ids_[i];
            out << j.dump() << '\n';
        }
        for (const auto& name : field_names_) {
            const auto& fd = fields_.at(name);
            nlohmann::json lj;
            lj["f"] = name;
            lj["lengths"] = fd.lengths;
            out << lj.dump() << '\n';
            for (const auto& [term, list] : fd.postings) {
                nlohmann::json tj;
                tj["f"] = name;
                tj["t"] = term;
                auto& arr = tj["p"] = nlohmann::json::array();
                for (const auto& post : list) {
                    arr.push_back({post.doc, post.tf, post.positions});
                }
                out << tj.dump() << '\n';
            }
        }
        detail::write_or_throw(path, out.str());
    }

    static LexicalIndex load(const std::string& path) {
        LexicalIndex idx;
        bool have_header = false;
        std::size_t doc_count = 0;
        detail::for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& j) {
            const std::string where = path + ":" + std::to_string(line_no);
            if (!have_header) {
                if (j.value("format", "") != format_name) {
                    throw std::runtime_error(where + ": not a lexical index file");
                }
                if (j.value("version", 0) != format_version) {
                    throw std::runtime_error(where + ": unsupported index version " +
                                             std::to_string(j.value("version", 0)));
                }
                for (const auto& f : j.at("fields")) {
                    idx.field_names_.push_back(f.get<std::string>());
                    idx.fields_.emplace(f.get<std::string>(), FieldData{});
                }
                doc_count = j.at("doc_count").get<std::size_t>();
                have_header = true;
                return;
            }
            if (j.contains("id")) {
                auto ord = static_cast<std::uint32_t>(idx.doc_ids_.size());
                if (j.at("d").get<std::size_t>() != ord) {
                    throw std::runtime_error(where + ": document records out of order");
                }
                idx.doc_ids_.push_back(j.at("id").get<std::string>());
                idx.ordinals_.emplace(idx.doc_ids_.back(), ord);
                return;
            }
            const std::string field = j.at("f").get<std::string>();
            auto fit = idx.fields_.find(field);
            if (fit == idx.fields_.end()) {
                throw std::runtime_error(where + ": unknown field '" + field + "'");
            }
            if (j.contains("lengths")) {
                fit->second.lengths = j.at("lengths").get<std::vector<std::uint32_t>>();
                for (auto len : fit->second.lengths) fit->second.total_length += len;
                return;
            }
            PostingList list;
            for (const auto& pj : j.at("p")) {
                Posting post;
                post.doc = pj.at(0).get<std::uint32_t>();
                post.tf = pj.at(1).get<std::uint32_t>();
                post.positions = pj.at(2).get<std::vector<std::uint32_t>>();
                list.push_back(std::move(post));
            }
            fit->second.postings.emplace(j.at("t").get<std::string>(), std::move(list));
        });
        if (!have_header) throw std::runtime_error(path + ": empty index file");
        if (idx.doc_ids_.size() != doc_count) {
            throw std::runtime_error(path + ": expected " + std::to_string(doc_count) +
                                     " document records, got " + std::to_string(idx.doc_ids_.size()));
        }
        for (auto& [name, fd] : idx.fields_) {
            if (fd.lengths.size() != doc_count) {
                throw std::runtime_error(path + ": field '" + name + "' lengths incomplete");
            }
            fd.avg_length = doc_count == 0 ? 0.0
                                           : static_cast<double>(fd.total_length) /
                                                 static_cast<double>(doc_count);
        }
        return idx;
    }

private:
    struct FieldData {
        TermMap postings;
        std::vector<std::uint32_t> lengths;
        std::uint64_t total_length = 0;
        double avg_length = 0.0;
    };

    static constexpr const char* format_name = "hybridir-lexical";
    static constexpr int format_version = 1;

    const FieldData& field_data(const std::string& f) const {
        auto it = fields_.find(f);
        if (it == fields_.end()) throw std::invalid_argument("unknown field '" + f + "'");
        return it->second;
    }

    std::vector<std::string> field_names_;
    std::map<std::string, FieldData> fields_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::uint32_t> ordinals_;
};

namespace detail {

inline const LexicalIndex::Posting* find_posting(const LexicalIndex::PostingList& list,
                                                 std::uint32_t ord) {
    auto it = std::lower_bound(list.begin(), list.end(), ord,
                               [](const LexicalIndex::Posting& p, std::uint32_t d) {
                                   return p.doc < d;
                               });
    if (it == list.end() || it->doc != ord) return nullptr;
    return &*it;
}

}  // namespace detail

inline LexicalIndex build_lexical(const std::vector<Document>& corpus,
                                  const std::vector<std::string>& fields) {
    return LexicalIndex::build(corpus, fields);
}

/** BM25 score of one document for an analyzed query (sequence of terms).
 *  Terms absent from the document contribute zero.
 */
inline double bm25_score_terms(const LexicalIndex& index, const std::string& field,
                               const std::vector<std::string>& query_terms, std::uint32_t ord,
                               const Bm25Params& params = {}) {
    params.validate();
    if (ord >= index.doc_count()) throw std::invalid_argument("document ordinal out of range");
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto* list = index.postings(field, term);
        if (list == nullptr) continue;
        const auto* post = detail::find_posting(*list, ord);
        if (post == nullptr) continue;
        score += index.idf(list->size()) * index.saturation(field, post->tf, ord, params);
    }
    return score;
}

/// BM25 score of one document for a raw query string.
inline double bm25_score(const LexicalIndex& index, const std::string& field,
                         const std::string& query, std::uint32_t ord,
                         const Bm25Params& params = {}) {
    return bm25_score_terms(index, field, analyze(query).terms(), ord, params);
}

/** Top-k BM25 search over a single field.
 *
 * Exactly the documents containing at least one query term appear, ranked by
 * score descending with doc_id ascending ties. Extending k never reorders the
 * shared prefix.
 */
inline std::vector<ScoredHit> match_top_k(const LexicalIndex& index, const std::string& field,
                                          const std::string& query, std::size_t k,
                                          const Bm25Params& params = {}) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    params.validate();
    auto terms = analyze(query).terms();
    std::set<std::uint32_t> candidates;
    std::set<std::string> seen;
    for (const auto& term : terms) {
        if (!seen.insert(term).second) continue;
        const auto* list = index.postings(field, term);
        if (list == nullptr) continue;
        for (const auto& post : *list) candidates.insert(post.doc);
    }
    std::vector<ScoredHit> hits;
    hits.reserve(candidates.size());
    for (auto ord : candidates) {
        double s = bm25_score_terms(index, field, terms, ord, params);
        if (s > 0.0) hits.push_back({index.doc_id(ord), s, 0});
    }
    return finalize_hits(std::move(hits), k);
}

}  // namespace hybridir
