#pragma once

/** \file eval_runner.hpp
 *  \brief Batch retrieval benchmarks: index building, metric rows, reports.
 *
 * A benchmark run executes a list of retriever specs over a bundle's queries
 * (processed in sorted query-id order), computes ranking metrics under one
 * MetricConfig, and renders three artifacts:
 *
 *   - a fixed-width text table for humans,
 *   - newline-delimited JSON records {spec, dataset, metric, value} whose
 *     bytes are stable across identical runs (doubles in shortest
 *     round-trip form),
 *   - standard 6-column TREC run files (query-id Q0 doc-id rank score tag)
 *     consumable by conventional qrels scorers.
 */

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "dense_index.hpp"
#include "lexical_index.hpp"
#include "metrics.hpp"
#include "query_engine.hpp"
#include "sparse_index.hpp"

namespace hybridir {

/// Shortest decimal string that round-trips to the same double.
inline std::string double_to_string(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("double formatting failed");
    return {buf.data(), res.ptr};
}

/// How document-side indexes and vectors are produced.
struct IndexOptions {
    std::vector<std::string> fields{"title", "text"};
    Bm25Params bm25{};
    std::size_t embed_dim = 64;           ///< hashing embedder width when no vector file
    std::string dense_vectors_path;       ///< jsonl doc vectors; empty = hash embedder
    std::string query_vectors_path;       ///< jsonl query vectors keyed by query id
    std::string sparse_vectors_path;      ///< jsonl doc expansions; empty = tf*idf expander
    std::string query_expansions_path;    ///< jsonl query expansions keyed by query id

    void validate() const {
        if (fields.empty()) throw std::invalid_argument("index options: fields must not be empty");
        bm25.validate();
        if (embed_dim < 8) throw std::invalid_argument("index options: embed_dim must be >= 8");
    }
};

/** Owns every index a SearchContext points at. Build once per corpus; the
 *  context stays valid while the set is alive and unmoved.
 */
class IndexSet {
public:
    static IndexSet build(const std::vector<Document>& corpus, const IndexOptions& opt) {
        opt.validate();
        IndexSet s;
        s.embed_dim_ = opt.embed_dim;
        s.bm25_ = opt.bm25;
        s.lexical_ = LexicalIndex::build(corpus, opt.fields);

        if (opt.dense_vectors_path.empty()) {
            s.toy_embedder_ = true;
            for (const auto& d : corpus) {
                s.dense_.add(d.id, toy_embed(joined_fields(d), opt.embed_dim));
            }
        } else {
            s.dense_ = load_dense_vectors(opt.dense_vectors_path);
        }
        if (!opt.query_vectors_path.empty()) {
            auto qs = load_dense_vectors(opt.query_vectors_path);
            for (const auto& id : qs.ids()) s.query_vectors_.emplace(id, qs.vector(id));
        }

        s.expander_ = std::make_shared<TfIdfExpander>(CorpusStats::from_index(s.lexical_));
        if (opt.sparse_vectors_path.empty()) {
            for (const auto& d : corpus) {
                SparseVector v = s.expander_->expand(joined_fields(d));
                if (v.nonzeros() == 0) continue;  // empty docs carry no sparse vector
                s.sparse_.add(d.id, std::move(v));
            }
        } else {
            s.sparse_ = load_sparse_vectors(opt.sparse_vectors_path);
        }
        if (!opt.query_expansions_path.empty()) {
            auto qs = load_sparse_vectors(opt.query_expansions_path);
            for (const auto& id : qs.ids()) s.query_expansions_.emplace(id, qs.vector(id));
        }
        return s;
    }

    const LexicalIndex& lexical() const { return lexical_; }
    const DenseStore& dense() const { return dense_; }
    const SparseStore& sparse() const { return sparse_; }
    const Expander& expander() const { return *expander_; }

    SearchContext context() const {
        SearchContext ctx;
        ctx.lexical = &lexical_;
        ctx.dense = &dense_;
        ctx.sparse = &sparse_;
        if (toy_embedder_) {
            const std::size_t dim = embed_dim_;
            ctx.embed_query = [dim](const std::string& text) { return toy_embed(text, dim); };
        }
        ctx.expander = expander_.get();
        ctx.query_vectors = &query_vectors_;
        ctx.query_expansions = &query_expansions_;
        ctx.bm25 = bm25_;
        return ctx;
    }

    /// Document text as embedded and expanded: title and body joined.
    static std::string joined_fields(const Document& d) {
        if (d.title.empty()) return d.text;
        return d.title + " " + d.text;
    }

private:
    LexicalIndex lexical_;
    DenseStore dense_;
    SparseStore sparse_;
    std::shared_ptr<TfIdfExpander> expander_;
    std::unordered_map<std::string, DenseVector> query_vectors_;
    std::unordered_map<std::string, SparseVector> query_expansions_;
    Bm25Params bm25_{};
    std::size_t embed_dim_ = 64;
    bool toy_embedder_ = false;
};

struct MetricConfig {
    std::vector<std::size_t> accuracy_ks{5, 10, 20};
    std::size_t precision_k = 20;
    std::size_t ndcg_k = 10;
    int relevance_threshold = 1;
    bool exponential_gain = false;

    void validate() const {
        if (accuracy_ks.empty()) throw std::invalid_argument("metrics: accuracy_ks must not be empty");
        for (auto k : accuracy_ks) {
            if (k < 1) throw std::invalid_argument("metrics: accuracy cutoffs must be >= 1");
        }
        if (precision_k < 1 || ndcg_k < 1) {
            throw std::invalid_argument("metrics: cutoffs must be >= 1");
        }
    }

    /// Retrieval depth needed to evaluate every configured metric.
    std::size_t max_depth() const {
        std::size_t d = std::max(precision_k, ndcg_k);
        for (auto k : accuracy_ks) d = std::max(d, k);
        return d;
    }
};

struct EvalRow {
    std::string spec;
    std::string dataset;
    std::vector<std::pair<std::string, double>> metrics;  ///< fixed report order
    std::size_t query_count = 0;
    double wall_ms = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::vector<EvalRow> rows;
    /// Ranked runs per spec, in spec order; reused by TREC output and tests.
    std::vector<std::pair<std::string, std::vector<RankedRun>>> runs;
};

/** Execute every spec over the bundle and compute its metric row.
 *
 * Queries run in sorted id order. A query that analyzes to no terms yields
 * an empty run (and so counts as a miss wherever it is judgeable).
 */
inline EvalReport run_retriever_benchmark(const BenchmarkBundle& bundle,
                                          const std::vector<RetrieverSpec>& specs,
                                          const MetricConfig& config, const IndexSet& indexes) {
    config.validate();
    if (specs.empty()) throw std::invalid_argument("benchmark needs at least one retriever spec");
    EvalReport report;
    report.dataset = bundle.name;
    SearchContext ctx = indexes.context();

    std::vector<const QueryRecord*> queries;
    queries.reserve(bundle.queries.size());
    for (const auto& q : bundle.queries) queries.push_back(&q);
    std::sort(queries.begin(), queries.end(),
              [](const QueryRecord* a, const QueryRecord* b) { return a->id < b->id; });

    const std::size_t depth = config.max_depth();
    for (const auto& spec : specs) {
        spec.validate();
        const auto start = std::chrono::steady_clock::now();
        std::vector<RankedRun> runs;
        runs.reserve(queries.size());
        for (const auto* q : queries) {
            RankedRun run;
            run.query_id = q->id;
            if (!analyze(q->text).tokens.empty()) {
                run.hits = execute_retriever(spec, ctx, q->text, depth, q->id);
            }
            runs.push_back(std::move(run));
        }
        const auto end = std::chrono::steady_clock::now();

        EvalRow row;
        row.spec = spec.name();
        row.dataset = bundle.name;
        row.query_count = runs.size();
        row.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
        for (auto k : config.accuracy_ks) {
            row.metrics.emplace_back("acc@" + std::to_string(k),
                                     top_k_accuracy(runs, bundle.qrels, k,
                                                    config.relevance_threshold));
        }
        row.metrics.emplace_back("p@" + std::to_string(config.precision_k),
                                 precision_at_k(runs, bundle.qrels, config.precision_k,
                                                config.relevance_threshold));
        row.metrics.emplace_back("ndcg@" + std::to_string(config.ndcg_k),
                                 ndcg_at_k(runs, bundle.qrels, config.ndcg_k,
                                           config.exponential_gain));
        report.rows.push_back(std::move(row));
        report.runs.emplace_back(spec.name(), std::move(runs));
    }
    return report;
}

/// Convenience overload that builds the index set first.
inline EvalReport run_retriever_benchmark(const BenchmarkBundle& bundle,
                                          const std::vector<RetrieverSpec>& specs,
                                          const MetricConfig& config,
                                          const IndexOptions& options) {
    IndexSet indexes = IndexSet::build(bundle.corpus, options);
    return run_retriever_benchmark(bundle, specs, config, indexes);
}

/// Human-readable fixed-width table.
inline std::string report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "dataset: " << report.dataset << "\n\n";
    std::vector<std::string> headers{"spec"};
    if (!report.rows.empty()) {
        for (const auto& [name, v] : report.rows.front().metrics) headers.push_back(name);
    }
    headers.push_back("queries");
    headers.push_back("wall_ms");

    std::vector<std::vector<std::string>> cells;
    for (const auto& row : report.rows) {
        std::vector<std::string> line{row.spec};
        for (const auto& [name, v] : row.metrics) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(4) << v;
            line.push_back(cell.str());
        }
        line.push_back(std::to_string(row.query_count));
        std::ostringstream ms;
        ms << std::fixed << std::setprecision(1) << row.wall_ms;
        line.push_back(ms.str());
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& line : cells) widths[c] = std::max(widths[c], line[c].size());
    }
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out << (c == 0 ? "" : "  ") << std::setw(static_cast<int>(widths[c]))
                << (c == 0 ? std::left : std::right) << line[c];
        }
        out << '\n';
    };
    emit(headers);
    for (const auto& line : cells) emit(line);
    out << "\nqueries lacking a judged-relevant document are excluded from accuracy and "
           "precision; NDCG skips queries whose ideal DCG is zero.\n";
    return out.str();
}

/** Newline-delimited JSON, one record per (spec, metric). Byte-stable across
 *  identical runs: fixed key order, shortest round-trip doubles, no
 *  timing or environment fields.
 */
inline std::string report_ndjson(const EvalReport& report) {
    std::ostringstream out;
    for (const auto& row : report.rows) {
        for (const auto& [metric, value] : row.metrics) {
            out << "{\"spec\":" << nlohmann::json(row.spec).dump()
                << ",\"dataset\":" << nlohmann::json(row.dataset).dump()
                << ",\"metric\":" << nlohmann::json(metric).dump()
                << ",\"value\":" << double_to_string(value) << "}\n";
        }
    }
    return out.str();
}

/// Standard TREC run lines for one spec's runs.
inline std::string trec_run_lines(const std::vector<RankedRun>& runs, const std::string& tag) {
    std::ostringstream out;
    for (const auto& run : runs) {
        for (const auto& hit : run.hits) {
            out << run.query_id << " Q0 " << hit.doc_id << ' ' << hit.rank << ' '
                << double_to_string(hit.score) << ' ' << tag << '\n';
        }
    }
    return out.str();
}

}  // namespace hybridir
