#pragma once

/** \file corpus.hpp
 *  \brief Benchmark data model plus loaders and converters.
 *
 * The on-disk layout follows the common IR-benchmark convention:
 *   - corpus.jsonl   one document per line: {"_id", "title", "text", "metadata"}
 *   - queries.jsonl  one query per line:    {"_id", "text", ["answers"]}
 *   - qrels.tsv      tab-separated (query-id, corpus-id, score), optional header
 *
 * Reading-comprehension dumps (SQuAD-style and CoQA-style JSON) convert into
 * the same shape so one evaluation path serves every dataset.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "analyzer.hpp"

namespace hybridir {

struct Document {
    std::string id;
    std::string title;
    std::string text;
    std::map<std::string, std::string> metadata;
};

struct QueryRecord {
    std::string id;
    std::string text;
    std::vector<std::string> gold_answers;  ///< empty when the dataset has none
};

/// Graded relevance judgments, grades restricted to [-1, 2].
class RelevanceJudgments {
public:
    static constexpr int min_grade = -1;
    static constexpr int max_grade = 2;

    void add(const std::string& query_id, const std::string& doc_id, int grade) {
        if (grade < min_grade || grade > max_grade) {
            throw std::invalid_argument("relevance grade " + std::to_string(grade) +
                                        " out of range for query " + query_id);
        }
        grades_[query_id][doc_id] = grade;
    }

    /// Judged docs for one query; empty map when the query is unjudged.
    const std::map<std::string, int>& for_query(const std::string& query_id) const {
        static const std::map<std::string, int> empty;
        auto it = grades_.find(query_id);
        return it == grades_.end() ? empty : it->second;
    }

    std::optional<int> grade(const std::string& query_id, const std::string& doc_id) const {
        auto it = grades_.find(query_id);
        if (it == grades_.end()) return std::nullopt;
        auto jt = it->second.find(doc_id);
        if (jt == it->second.end()) return std::nullopt;
        return jt->second;
    }

    const std::map<std::string, std::map<std::string, int>>& by_query() const { return grades_; }

    std::size_t pair_count() const {
        std::size_t n = 0;
        for (const auto& [q, docs] : grades_) n += docs.size();
        return n;
    }

private:
    std::map<std::string, std::map<std::string, int>> grades_;
};

struct BenchmarkBundle {
    std::string name;
    std::vector<Document> corpus;
    std::vector<QueryRecord> queries;
    RelevanceJudgments qrels;
};

namespace detail {

inline std::string json_to_flat_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

// Nested metadata objects flatten to dotted leaf paths; scalars stringify.
inline void flatten_metadata(const nlohmann::json& obj, const std::string& prefix,
                             std::map<std::string, std::string>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object()) {
            flatten_metadata(it.value(), key, out);
        } else if (!it.value().is_null()) {
            out[key] = json_to_flat_string(it.value());
        }
    }
}

inline std::string id_from_json(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw std::runtime_error(where + ": _id must be a string or integer");
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

/// Calls fn(line_no, parsed json) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    auto in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed JSON (" + e.what() + ")");
        }
        fn(line_no, j);
    }
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// FNV-1a 64-bit; used for stable content-derived document ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace detail

/** Check referential integrity: every qrels pair must point at a known
 *  query and a known document. Throws listing every offending id.
 */
inline void validate_bundle(const BenchmarkBundle& bundle) {
    std::set<std::string> doc_ids;
    for (const auto& d : bundle.corpus) {
        if (d.id.empty()) throw std::runtime_error("bundle " + bundle.name + ": document with empty id");
        if (!doc_ids.insert(d.id).second) {
            throw std::runtime_error("bundle " + bundle.name + ": duplicate document id " + d.id);
        }
    }
    std::set<std::string> query_ids;
    for (const auto& q : bundle.queries) {
        if (q.id.empty()) throw std::runtime_error("bundle " + bundle.name + ": query with empty id");
        if (!query_ids.insert(q.id).second) {
            throw std::runtime_error("bundle " + bundle.name + ": duplicate query id " + q.id);
        }
    }
    std::vector<std::string> bad_queries, bad_docs;
    for (const auto& [qid, docs] : bundle.qrels.by_query()) {
        if (!query_ids.count(qid)) bad_queries.push_back(qid);
        for (const auto& [did, grade] : docs) {
            if (!doc_ids.count(did)) bad_docs.push_back(did);
        }
    }
    if (!bad_queries.empty() || !bad_docs.empty()) {
        std::ostringstream msg;
        msg << "bundle " << bundle.name << ": qrels reference unknown ids;";
        if (!bad_queries.empty()) {
            msg << " queries:";
            for (const auto& q : bad_queries) msg << ' ' << q;
            msg << ';';
        }
        if (!bad_docs.empty()) {
            msg << " docs:";
            for (const auto& d : bad_docs) msg << ' ' << d;
        }
        throw std::runtime_error(msg.str());
    }
}

/// Load a corpus.jsonl file.
inline std::vector<Document> load_corpus_jsonl(const std::string& path) {
    std::vector<Document> out;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& j) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!j.is_object() || !j.contains("_id")) {
            throw std::runtime_error(where + ": expected an object with an _id field");
        }
        Document d;
        d.id = detail::id_from_json(j.at("_id"), where);
        if (j.contains("title") && !j.at("title").is_null()) {
            if (!j.at("title").is_string()) throw std::runtime_error(where + ": title must be a string");
            d.title = j.at("title").get<std::string>();
        }
        if (j.contains("text") && !j.at("text").is_null()) {
            if (!j.at("text").is_string()) throw std::runtime_error(where + ": text must be a string");
            d.text = j.at("text").get<std::string>();
        }
        if (j.contains("metadata")) {
            if (!j.at("metadata").is_object()) {
                throw std::runtime_error(where + ": metadata must be an object");
            }
            detail::flatten_metadata(j.at("metadata"), "", d.metadata);
        }
        out.push_back(std::move(d));
    });
    return out;
}

/// Load a queries.jsonl file; "answers" may sit top-level or under metadata.
inline std::vector<QueryRecord> load_queries_jsonl(const std::string& path) {
    std::vector<QueryRecord> out;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const nlohmann::json& j) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!j.is_object() || !j.contains("_id") || !j.contains("text")) {
            throw std::runtime_error(where + ": expected an object with _id and text");
        }
        QueryRecord q;
        q.id = detail::id_from_json(j.at("_id"), where);
        if (!j.at("text").is_string()) throw std::runtime_error(where + ": text must be a string");
        q.text = j.at("text").get<std::string>();
        const nlohmann::json* answers = nullptr;
        if (j.contains("answers")) answers = &j.at("answers");
        else if (j.contains("metadata") && j.at("metadata").is_object() &&
                 j.at("metadata").contains("answers")) {
            answers = &j.at("metadata").at("answers");
        }
        if (answers != nullptr) {
            if (!answers->is_array()) throw std::runtime_error(where + ": answers must be an array");
            for (const auto& a : *answers) {
                if (!a.is_string()) throw std::runtime_error(where + ": answers must be strings");
                q.gold_answers.push_back(a.get<std::string>());
            }
        }
        out.push_back(std::move(q));
    });
    return out;
}

/** Load a qrels TSV. Exactly three columns per row; a first line whose third
 *  column is not an integer is treated as a header and skipped.
 */
inline RelevanceJudgments load_qrels_tsv(const std::string& path) {
    auto in = detail::open_or_throw(path);
    RelevanceJudgments out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = detail::split_tabs(line);
        const std::string where = path + ":" + std::to_string(line_no);
        if (cols.size() != 3) {
            throw std::runtime_error(where + ": expected 3 tab-separated columns, got " +
                                     std::to_string(cols.size()));
        }
        int grade = 0;
        auto parsed = [&]() {
            try {
                std::size_t used = 0;
                grade = std::stoi(cols[2], &used);
                return used == cols[2].size();
            } catch (const std::exception&) {
                return false;
            }
        }();
        if (!parsed) {
            if (line_no == 1) continue;  // header row
            throw std::runtime_error(where + ": score column is not an integer: " + cols[2]);
        }
        try {
            out.add(cols[0], cols[1], grade);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    }
    return out;
}

/// Load and validate a full benchmark directory triple.
inline BenchmarkBundle load_beir(const std::string& corpus_path, const std::string& queries_path,
                                 const std::string& qrels_path, const std::string& name = "beir") {
    BenchmarkBundle b;
    b.name = name;
    b.corpus = load_corpus_jsonl(corpus_path);
    b.queries = load_queries_jsonl(queries_path);
    b.qrels = load_qrels_tsv(qrels_path);
    validate_bundle(b);
    return b;
}

/** Convert a SQuAD-style JSON dump (v1.1 layout) into a bundle.
 *
 * Each distinct (title, paragraph context) pair becomes one document whose id
 * is a hash of its content, so conversion is reproducible across runs and
 * machines. Every question is relevant (grade 1) to exactly its source
 * paragraph's document.
 */
inline BenchmarkBundle convert_squad(const std::string& path, const std::string& name = "squad") {
    auto in = detail::open_or_throw(path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON (" + std::string(e.what()) + ")");
    }
    if (!root.is_object() || !root.contains("data") || !root.at("data").is_array()) {
        throw std::runtime_error(path + ": expected top-level object with a data array");
    }
    BenchmarkBundle b;
    b.name = name;
    std::map<std::string, std::string> seen;  // content key -> doc id
    std::size_t ai = 0;
    for (const auto& article : root.at("data")) {
        const std::string awhere = path + ": data[" + std::to_string(ai) + "]";
        std::string title;
        if (article.contains("title") && article.at("title").is_string()) {
            title = article.at("title").get<std::string>();
        }
        if (!article.contains("paragraphs") || !article.at("paragraphs").is_array()) {
            throw std::runtime_error(awhere + ": missing paragraphs array");
        }
        std::size_t pi = 0;
        for (const auto& para : article.at("paragraphs")) {
            const std::string pwhere = awhere + ".paragraphs[" + std::to_string(pi) + "]";
            if (!para.contains("context") || !para.at("context").is_string()) {
                throw std::runtime_error(pwhere + ": missing context string");
            }
            const std::string context = para.at("context").get<std::string>();
            const std::string key = title + '\x1f' + context;
            auto it = seen.find(key);
            std::string doc_id;
            if (it != seen.end()) {
                doc_id = it->second;
            } else {
                doc_id = "sq" + detail::hex64(detail::fnv1a64(key));
                seen.emplace(key, doc_id);
                b.corpus.push_back({doc_id, title, context, {}});
            }
            if (!para.contains("qas") || !para.at("qas").is_array()) {
                throw std::runtime_error(pwhere + ": missing qas array");
            }
            std::size_t qi = 0;
            for (const auto& qa : para.at("qas")) {
                const std::string qwhere = pwhere + ".qas[" + std::to_string(qi) + "]";
                if (!qa.contains("id") || !qa.contains("question")) {
                    throw std::runtime_error(qwhere + ": missing id or question");
                }
                QueryRecord q;
                q.id = detail::id_from_json(qa.at("id"), qwhere);
                q.text = qa.at("question").get<std::string>();
                if (qa.contains("answers") && qa.at("answers").is_array()) {
                    for (const auto& ans : qa.at("answers")) {
                        if (!ans.contains("text")) continue;
                        std::string t = ans.at("text").get<std::string>();
                        bool dup = false;
                        for (const auto& g : q.gold_answers) dup = dup || g == t;
                        if (!dup) q.gold_answers.push_back(std::move(t));
                    }
                }
                b.qrels.add(q.id, doc_id, 1);
                b.queries.push_back(std::move(q));
                ++qi;
            }
            ++pi;
        }
        ++ai;
    }
    validate_bundle(b);
    return b;
}

/** Convert a CoQA-style JSON dump into a bundle.
 *
 * One document per story, one query per question turn (id "<story>_t<turn>"),
 * gold answer taken from the matching answer turn.
 */
inline BenchmarkBundle convert_coqa(const std::string& path, const std::string& name = "coqa") {
    auto in = detail::open_or_throw(path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON (" + std::string(e.what()) + ")");
    }
    if (!root.is_object() || !root.contains("data") || !root.at("data").is_array()) {
        throw std::runtime_error(path + ": expected top-level object with a data array");
    }
    BenchmarkBundle b;
    b.name = name;
    std::size_t si = 0;
    for (const auto& item : root.at("data")) {
        const std::string swhere = path + ": data[" + std::to_string(si) + "]";
        if (!item.contains("story") || !item.at("story").is_string()) {
            throw std::runtime_error(swhere + ": missing story string");
        }
        std::string doc_id;
        if (item.contains("id")) {
            doc_id = detail::id_from_json(item.at("id"), swhere);
        } else {
            doc_id = "coqa" + std::to_string(si);
        }
        b.corpus.push_back({doc_id, "", item.at("story").get<std::string>(), {}});
        if (!item.contains("questions") || !item.at("questions").is_array() ||
            !item.contains("answers") || !item.at("answers").is_array()) {
            throw std::runtime_error(swhere + ": missing questions or answers array");
        }
        const auto& questions = item.at("questions");
        const auto& answers = item.at("answers");
        if (questions.size() != answers.size()) {
            throw std::runtime_error(swhere + ": questions and answers differ in length");
        }
        for (std::size_t i = 0; i < questions.size(); ++i) {
            const auto& qj = questions[i];
            const auto& aj = answers[i];
            const std::string qwhere = swhere + ".questions[" + std::to_string(i) + "]";
            if (!qj.contains("input_text") || !qj.contains("turn_id")) {
                throw std::runtime_error(qwhere + ": missing input_text or turn_id");
            }
            if (!aj.contains("turn_id") || aj.at("turn_id") != qj.at("turn_id")) {
                throw std::runtime_error(qwhere + ": answer turn_id does not match");
            }
            QueryRecord q;
            q.id = doc_id + "_t" + std::to_string(qj.at("turn_id").get<std::int64_t>());
            q.text = qj.at("input_text").get<std::string>();
            if (aj.contains("input_text") && aj.at("input_text").is_string()) {
                q.gold_answers.push_back(aj.at("input_text").get<std::string>());
            }
            if (aj.contains("span_text") && aj.at("span_text").is_string()) {
                std::string span = aj.at("span_text").get<std::string>();
                bool dup = false;
                for (const auto& g : q.gold_answers) dup = dup || g == span;
                if (!dup && !span.empty()) q.gold_answers.push_back(std::move(span));
            }
            b.qrels.add(q.id, doc_id, 1);
            b.queries.push_back(std::move(q));
        }
        ++si;
    }
    validate_bundle(b);
    return b;
}

/// Write a bundle back out as the jsonl/tsv triple under dir (created if needed).
inline void save_beir(const BenchmarkBundle& bundle, const std::string& dir);

namespace detail {
inline void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}
}  // namespace detail

inline void save_beir(const BenchmarkBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream corpus;
    for (const auto& d : bundle.corpus) {
        nlohmann::json j;
        j["_id"] = d.id;
        j["title"] = d.title;
        j["text"] = d.text;
        j["metadata"] = d.metadata;
        corpus << j.dump() << '\n';
    }
    std::ostringstream queries;
    for (const auto& q : bundle.queries) {
        nlohmann::json j;
        j["_id"] = q.id;
        j["text"] = q.text;
        if (!q.gold_answers.empty()) j["answers"] = q.gold_answers;
        queries << j.dump() << '\n';
    }
    std::ostringstream qrels;
    qrels << "query-id\tcorpus-id\tscore\n";
    for (const auto& [qid, docs] : bundle.qrels.by_query()) {
        for (const auto& [did, grade] : docs) {
            qrels << qid << '\t' << did << '\t' << grade << '\n';
        }
    }
    detail::write_or_throw(dir + "/corpus.jsonl", corpus.str());
    detail::write_or_throw(dir + "/queries.jsonl", queries.str());
    detail::write_or_throw(dir + "/qrels.tsv", qrels.str());
}

}  // namespace hybridir
