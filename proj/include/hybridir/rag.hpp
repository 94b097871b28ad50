#pragma once

/** \file rag.hpp
 *  \brief Retrieval-augmented generation: prompt assembly, generator clients,
 *         and the end-to-end answer benchmark.
 *
 * The prompt template carries a {contexts} and a {question} slot (each
 * exactly once) and a whitespace-token budget for the assembled prompt.
 * Retrieved contexts pack greedily in rank order: whole contexts while they
 * fit, then the first one that does not fit is tail-trimmed to the remaining
 * budget and packing stops.
 *
 * Generators are either a deterministic extractive stub (the sentence from
 * the packed contexts with the highest token F1 against the question) or an
 * HTTP endpoint speaking the minimal wire contract
 *   POST {"prompt", "max_new_tokens", "temperature"} -> {"text"}.
 * A per-query generator failure never aborts the benchmark: the item records
 * the error and scores zero.
 */

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "corpus.hpp"
#include "eval_runner.hpp"
#include "metrics.hpp"
#include "query_engine.hpp"

namespace hybridir {

struct PromptTemplate {
    std::string text =
        "Answer the question based only on the following context.\n"
        "Context: {contexts}\n"
        "Question: {question}\n"
        "Answer:";
    std::string context_separator = "\n\n";
    std::size_t token_budget = 1800;  ///< whitespace tokens for the whole prompt

    void validate() const {
        auto count = [&](const std::string& slot) {
            std::size_t n = 0, pos = 0;
            while ((pos = text.find(slot, pos)) != std::string::npos) {
                ++n;
                pos += slot.size();
            }
            return n;
        };
        if (count("{contexts}") != 1) {
            throw std::invalid_argument("prompt template needs exactly one {contexts} slot");
        }
        if (count("{question}") != 1) {
            throw std::invalid_argument("prompt template needs exactly one {question} slot");
        }
        if (token_budget < 1) throw std::invalid_argument("token_budget must be >= 1");
    }
};

namespace detail {

inline std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur = {};
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::string replace_once(std::string s, const std::string& slot, const std::string& value) {
    auto pos = s.find(slot);
    s.replace(pos, slot.size(), value);
    return s;
}

}  // namespace detail

/** Fill the template with the question and as many contexts as the budget
 *  allows (whole in rank order, the first overflowing one tail-trimmed).
 */
inline std::string assemble_prompt(const std::string& question,
                                   const std::vector<std::string>& contexts,
                                   const PromptTemplate& tmpl = {}) {
    tmpl.validate();
    const std::string base =
        detail::replace_once(detail::replace_once(tmpl.text, "{contexts}", ""), "{question}",
                             question);
    const std::size_t base_tokens = detail::whitespace_tokens(base).size();
    const std::size_t remaining = tmpl.token_budget > base_tokens
                                      ? tmpl.token_budget - base_tokens
                                      : 0;
    std::string joined;
    std::size_t used = 0;
    for (const auto& ctx : contexts) {
        auto tokens = detail::whitespace_tokens(ctx);
        if (tokens.empty()) continue;
        if (used + tokens.size() <= remaining) {
            if (!joined.empty()) joined += tmpl.context_separator;
            joined += ctx;
            used += tokens.size();
            continue;
        }
        const std::size_t room = remaining - used;
        if (room > 0) {
            std::string trimmed;
            for (std::size_t i = 0; i < room; ++i) {
                if (!trimmed.empty()) trimmed += ' ';
                trimmed += tokens[i];
            }
            if (!joined.empty()) joined += tmpl.context_separator;
            joined += trimmed;
        }
        break;  // budget exhausted
    }
    return detail::replace_once(detail::replace_once(tmpl.text, "{contexts}", joined),
                                "{question}", question);
}

struct GeneratorConfig {
    enum class Mode { extractive_stub, http };
    Mode mode = Mode::extractive_stub;
    std::string endpoint;      ///< http://host[:port][/path]
    std::string bearer_token;  ///< sent as "Authorization: Bearer ..." when set
    int max_new_tokens = 64;
    double temperature = 0.0;
    int timeout_ms = 30000;

    void validate() const {
        if (mode == Mode::http && endpoint.empty()) {
            throw std::invalid_argument("http generator requires an endpoint");
        }
        if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
        if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
        if (timeout_ms < 1) throw std::invalid_argument("timeout_ms must be >= 1");
    }
};

/// Environment overrides; set variables win over the config file.
inline void apply_generator_env(GeneratorConfig& config) {
    if (const char* ep = std::getenv("HYBRIDIR_GENERATOR_ENDPOINT"); ep != nullptr && *ep != '\0') {
        config.mode = GeneratorConfig::Mode::http;
        config.endpoint = ep;
    }
    if (const char* tok = std::getenv("HYBRIDIR_GENERATOR_TOKEN"); tok != nullptr && *tok != '\0') {
        config.bearer_token = tok;
    }
}

/** Deterministic fallback "generator": the sentence of the packed contexts
 *  with the highest token F1 against the question; earliest sentence on
 *  ties. Returns "" when the contexts hold no sentence.
 */
inline std::string extractive_stub_answer(const std::string& question,
                                          const std::vector<std::string>& contexts) {
    std::string all;
    for (const auto& c : contexts) {
        if (!all.empty()) all += ' ';
        all += c;
    }
    std::vector<std::string> sentences;
    std::string cur;
    for (char c : all) {
        if (c == '.' || c == '!' || c == '?') {
            if (!cur.empty()) sentences.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) sentences.push_back(cur);

    std::string best;
    double best_f1 = -1.0;
    for (const auto& s : sentences) {
        auto tokens = detail::whitespace_tokens(s);
        if (tokens.empty()) continue;
        std::string trimmed;
        for (const auto& t : tokens) {
            if (!trimmed.empty()) trimmed += ' ';
            trimmed += t;
        }
        const double f1 = token_f1(trimmed, {question});
        if (f1 > best_f1) {
            best_f1 = f1;
            best = trimmed;
        }
    }
    return best;
}

namespace detail {

struct ParsedEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'
};

inline ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("generator endpoint must start with http://");
    }
    const std::string scheme = endpoint.substr(0, scheme_end);
    if (scheme != "http") {
        throw std::invalid_argument("unsupported generator endpoint scheme '" + scheme +
                                    "' (only http is built in)");
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace detail

/** Call the generator for one prompt. The HTTP mode posts exactly
 *  {"prompt", "max_new_tokens", "temperature"} and reads {"text"}; anything
 *  else (transport error, non-200, malformed body) throws.
 */
inline std::string generate_answer(const GeneratorConfig& config, const std::string& prompt,
                                   const std::string& question,
                                   const std::vector<std::string>& contexts) {
    config.validate();
    if (config.mode == GeneratorConfig::Mode::extractive_stub) {
        return extractive_stub_answer(question, contexts);
    }
    auto [base, path] = detail::parse_endpoint(config.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(0, config.timeout_ms * 1000);
    client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!config.bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + config.bearer_token);
    }
    nlohmann::json body;
    body["prompt"] = prompt;
    body["max_new_tokens"] = config.max_new_tokens;
    body["temperature"] = config.temperature;
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw std::runtime_error("generator request to " + config.endpoint + " failed: " +
                                 httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw std::runtime_error("generator returned status " + std::to_string(res->status));
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("generator response is not JSON: " + std::string(e.what()));
    }
    if (!parsed.is_object() || !parsed.contains("text") || !parsed.at("text").is_string()) {
        throw std::runtime_error("generator response lacks a \"text\" string");
    }
    return parsed.at("text").get<std::string>();
}

struct RagOptions {
    PromptTemplate prompt{};
    GeneratorConfig generator{};
    std::size_t k_contexts = 5;
    std::size_t parallelism = 4;

    void validate() const {
        prompt.validate();
        generator.validate();
        if (k_contexts < 1) throw std::invalid_argument("k_contexts must be >= 1");
        if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    }
};

struct RagItem {
    std::string query_id;
    std::string question;
    std::string answer;
    std::vector<std::string> context_ids;
    double em = 0.0;
    double f1 = 0.0;
    bool failed = false;
    std::string error;
};

struct RagReport {
    std::string spec;
    std::string dataset;
    std::vector<RagItem> items;  ///< sorted by query id
    double em = 0.0;
    double f1 = 0.0;
    double top5_accuracy = 0.0;
    double top20_accuracy = 0.0;
    std::size_t failures = 0;
    double wall_ms = 0.0;
};

/// Produces the ranked hits for one query at the requested depth.
using RetrieverFn = std::function<std::vector<ScoredHit>(const QueryRecord&, std::size_t)>;

/** Run the answer benchmark with an arbitrary retriever.
 *
 * Each query retrieves once at depth max(20, k_contexts); the top k_contexts
 * documents become prompt contexts. Workers process queries in parallel but
 * the report is assembled in sorted query-id order, so results are
 * deterministic for deterministic generators. Every query must carry at
 * least one gold answer.
 */
inline RagReport run_rag_benchmark(const BenchmarkBundle& bundle, const std::string& spec_name,
                                   const RetrieverFn& retrieve, const RagOptions& options) {
    options.validate();
    for (const auto& q : bundle.queries) {
        if (q.gold_answers.empty()) {
            throw std::invalid_argument("query " + q.id + " has no gold answers");
        }
    }
    std::map<std::string, const Document*> docs;
    for (const auto& d : bundle.corpus) docs.emplace(d.id, &d);

    std::vector<const QueryRecord*> queries;
    for (const auto& q : bundle.queries) queries.push_back(&q);
    std::sort(queries.begin(), queries.end(),
              [](const QueryRecord* a, const QueryRecord* b) { return a->id < b->id; });

    const std::size_t depth = std::max<std::size_t>(20, options.k_contexts);
    const auto start = std::chrono::steady_clock::now();

    std::vector<RagItem> items(queries.size());
    std::vector<RankedRun> runs(queries.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!aborted.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= queries.size()) return;
            const QueryRecord& q = *queries[i];
            try {
                auto hits = retrieve(q, depth);
                RagItem item;
                item.query_id = q.id;
                item.question = q.text;
                std::vector<std::string> contexts;
                for (std::size_t j = 0; j < std::min(options.k_contexts, hits.size()); ++j) {
                    item.context_ids.push_back(hits[j].doc_id);
                    auto dit = docs.find(hits[j].doc_id);
                    if (dit == docs.end()) {
                        throw std::runtime_error("retriever returned unknown doc " +
                                                 hits[j].doc_id);
                    }
                    const Document& d = *dit->second;
                    contexts.push_back(d.title.empty() ? d.text : d.title + "\n" + d.text);
                }
                const std::string prompt = assemble_prompt(q.text, contexts, options.prompt);
                try {
                    item.answer = generate_answer(options.generator, prompt, q.text, contexts);
                    item.em = exact_match(item.answer, q.gold_answers);
                    item.f1 = token_f1(item.answer, q.gold_answers);
                } catch (const std::exception& e) {
                    item.failed = true;
                    item.error = "query " + q.id + ": " + e.what();
                }
                runs[i] = {q.id, std::move(hits)};
                items[i] = std::move(item);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                aborted.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(options.parallelism, std::max<std::size_t>(queries.size(), 1));
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    const auto end = std::chrono::steady_clock::now();
    RagReport report;
    report.spec = spec_name;
    report.dataset = bundle.name;
    report.items = std::move(items);
    report.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
    for (const auto& item : report.items) {
        report.em += item.em;
        report.f1 += item.f1;
        report.failures += item.failed ? 1 : 0;
    }
    if (!report.items.empty()) {
        report.em /= static_cast<double>(report.items.size());
        report.f1 /= static_cast<double>(report.items.size());
    }
    report.top5_accuracy = top_k_accuracy(runs, bundle.qrels, 5);
    report.top20_accuracy = top_k_accuracy(runs, bundle.qrels, 20);
    return report;
}

/// Convenience overload running a retriever spec against built indexes.
inline RagReport run_rag_benchmark(const BenchmarkBundle& bundle, const RetrieverSpec& spec,
                                   const IndexSet& indexes, const RagOptions& options) {
    SearchContext ctx = indexes.context();
    RetrieverFn retrieve = [&spec, ctx](const QueryRecord& q, std::size_t depth) {
        if (analyze(q.text).tokens.empty()) return std::vector<ScoredHit>{};
        return execute_retriever(spec, ctx, q.text, depth, q.id);
    };
    return run_rag_benchmark(bundle, spec.name(), retrieve, options);
}

/// Human-readable summary plus one line per query.
inline std::string rag_report_text(const RagReport& report) {
    std::ostringstream out;
    out << "dataset: " << report.dataset << "\nspec: " << report.spec
        << "\nqueries: " << report.items.size() << "\nem: ";
    out << double_to_string(report.em) << "\nf1: " << double_to_string(report.f1)
        << "\nacc@5: " << double_to_string(report.top5_accuracy)
        << "\nacc@20: " << double_to_string(report.top20_accuracy)
        << "\nfailures: " << report.failures << "\n\n";
    out << "query\tem\tf1\tstatus\n";
    for (const auto& item : report.items) {
        out << item.query_id << '\t' << double_to_string(item.em) << '\t'
            << double_to_string(item.f1) << '\t' << (item.failed ? item.error : "ok") << '\n';
    }
    return out.str();
}

/// Byte-stable metric records, same shape as the retrieval report.
inline std::string rag_report_ndjson(const RagReport& report) {
    std::ostringstream out;
    auto emit = [&](const std::string& metric, double value) {
        out << "{\"spec\":" << nlohmann::json(report.spec).dump()
            << ",\"dataset\":" << nlohmann::json(report.dataset).dump()
            << ",\"metric\":" << nlohmann::json(metric).dump()
            << ",\"value\":" << double_to_string(value) << "}\n";
    };
    emit("em", report.em);
    emit("f1", report.f1);
    emit("acc@5", report.top5_accuracy);
    emit("acc@20", report.top20_accuracy);
    emit("failures", static_cast<double>(report.failures));
    return out.str();
}

}  // namespace hybridir
