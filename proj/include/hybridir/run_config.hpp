#pragma once

/** \file run_config.hpp
 *  \brief JSON run configuration for the command-line tools.
 *
 * A run config names the dataset files and sets index, retriever, metric and
 * answer-pipeline options. Parsing is strict and total: unknown keys are
 * errors, and every problem in the file is collected and reported in one
 * message before anything touches the filesystem.
 */

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eval_runner.hpp"
#include "query_engine.hpp"
#include "rag.hpp"

namespace hybridir {

struct RunConfig {
    std::string dataset_name = "dataset";
    std::string corpus_path;
    std::string queries_path;
    std::string qrels_path;
    IndexOptions index{};
    std::vector<RetrieverSpec> specs = sextet_presets();
    MetricConfig metrics{};
    RagOptions rag{};
    std::string output_dir = ".";
    std::uint64_t seed = 0;  ///< reserved for stochastic components; pipelines are deterministic

    /// Load the dataset triple named by the config.
    BenchmarkBundle load_bundle() const {
        if (corpus_path.empty() || queries_path.empty() || qrels_path.empty()) {
            throw std::runtime_error("run config names no dataset files");
        }
        return load_beir(corpus_path, queries_path, qrels_path, dataset_name);
    }

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ": malformed JSON (" + e.what() + ")");
        }
        try {
            return from_json(j);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": " + e.what());
        }
    }
};

namespace detail {

class ErrorCollector {
public:
    void add(const std::string& msg) { messages_.push_back(msg); }

    template <typename Fn>
    void attempt(const std::string& where, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            messages_.push_back(where + ": " + e.what());
        }
    }

    void check_keys(const nlohmann::json& obj, const std::string& where,
                    const std::set<std::string>& known) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!known.count(it.key())) add(where + ": unknown key '" + it.key() + "'");
        }
    }

    void throw_if_any() const {
        if (messages_.empty()) return;
        std::ostringstream msg;
        msg << "invalid run config (" << messages_.size() << " problem"
            << (messages_.size() == 1 ? "" : "s") << "):";
        for (const auto& m : messages_) msg << "\n  - " << m;
        throw std::runtime_error(msg.str());
    }

private:
    std::vector<std::string> messages_;
};

}  // namespace detail

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("run config must be a JSON object");
    detail::ErrorCollector errors;
    errors.check_keys(j, "config",
                      {"dataset", "index", "specs", "metrics", "rag", "output_dir", "seed"});
    RunConfig cfg;

    if (j.contains("dataset")) {
        errors.attempt("dataset", [&] {
            const auto& d = j.at("dataset");
            if (!d.is_object()) throw std::runtime_error("must be an object");
            errors.check_keys(d, "dataset", {"name", "corpus", "queries", "qrels"});
            cfg.dataset_name = d.value("name", cfg.dataset_name);
            cfg.corpus_path = d.value("corpus", "");
            cfg.queries_path = d.value("queries", "");
            cfg.qrels_path = d.value("qrels", "");
        });
    }

    if (j.contains("index")) {
        errors.attempt("index", [&] {
            const auto& x = j.at("index");
            if (!x.is_object()) throw std::runtime_error("must be an object");
            errors.check_keys(x, "index",
                              {"fields", "bm25", "embed_dim", "dense_vectors", "query_vectors",
                               "sparse_vectors", "query_expansions"});
            if (x.contains("fields")) {
                cfg.index.fields = x.at("fields").get<std::vector<std::string>>();
            }
            if (x.contains("bm25")) {
                const auto& bm = x.at("bm25");
                errors.check_keys(bm, "index.bm25", {"k1", "b"});
                cfg.index.bm25.k1 = bm.value("k1", cfg.index.bm25.k1);
                cfg.index.bm25.b = bm.value("b", cfg.index.bm25.b);
            }
            cfg.index.embed_dim = x.value("embed_dim", cfg.index.embed_dim);
            cfg.index.dense_vectors_path = x.value("dense_vectors", "");
            cfg.index.query_vectors_path = x.value("query_vectors", "");
            cfg.index.sparse_vectors_path = x.value("sparse_vectors", "");
            cfg.index.query_expansions_path = x.value("query_expansions", "");
            cfg.index.validate();
        });
    }

    if (j.contains("specs")) {
        errors.attempt("specs", [&] {
            const auto& s = j.at("specs");
            if (s.is_string()) {
                if (s.get<std::string>() != "sextet") {
                    throw std::runtime_error("string form must be \"sextet\"");
                }
                cfg.specs = sextet_presets();
            } else if (s.is_array()) {
                cfg.specs.clear();
                std::size_t n = 0;
                for (const auto& item : s) {
                    try {
                        cfg.specs.push_back(RetrieverSpec::from_json(item));
                    } catch (const std::exception& e) {
                        errors.add("specs[" + std::to_string(n) + "]: " + e.what());
                    }
                    ++n;
                }
                if (cfg.specs.empty() && n == 0) throw std::runtime_error("array must not be empty");
            } else {
                throw std::runtime_error("must be \"sextet\" or an array of spec objects");
            }
        });
    }

    if (j.contains("metrics")) {
        errors.attempt("metrics", [&] {
            const auto& m = j.at("metrics");
            if (!m.is_object()) throw std::runtime_error("must be an object");
            errors.check_keys(m, "metrics",
                              {"accuracy_ks", "precision_k", "ndcg_k", "relevance_threshold",
                               "exponential_gain"});
            if (m.contains("accuracy_ks")) {
                cfg.metrics.accuracy_ks = m.at("accuracy_ks").get<std::vector<std::size_t>>();
            }
            cfg.metrics.precision_k = m.value("precision_k", cfg.metrics.precision_k);
            cfg.metrics.ndcg_k = m.value("ndcg_k", cfg.metrics.ndcg_k);
            cfg.metrics.relevance_threshold =
                m.value("relevance_threshold", cfg.metrics.relevance_threshold);
            cfg.metrics.exponential_gain =
                m.value("exponential_gain", cfg.metrics.exponential_gain);
            cfg.metrics.validate();
        });
    }

    if (j.contains("rag")) {
        errors.attempt("rag", [&] {
            const auto& r = j.at("rag");
            if (!r.is_object()) throw std::runtime_error("must be an object");
            errors.check_keys(r, "rag",
                              {"k_contexts", "parallelism", "token_budget", "template",
                               "context_separator", "generator"});
            cfg.rag.k_contexts = r.value("k_contexts", cfg.rag.k_contexts);
            cfg.rag.parallelism = r.value("parallelism", cfg.rag.parallelism);
            cfg.rag.prompt.token_budget = r.value("token_budget", cfg.rag.prompt.token_budget);
            if (r.contains("template")) cfg.rag.prompt.text = r.at("template").get<std::string>();
            if (r.contains("context_separator")) {
                cfg.rag.prompt.context_separator = r.at("context_separator").get<std::string>();
            }
            if (r.contains("generator")) {
                const auto& g = r.at("generator");
                errors.check_keys(g, "rag.generator",
                                  {"mode", "endpoint", "bearer_token", "max_new_tokens",
                                   "temperature", "timeout_ms"});
                const std::string mode = g.value("mode", "stub");
                if (mode == "stub") {
                    cfg.rag.generator.mode = GeneratorConfig::Mode::extractive_stub;
                } else if (mode == "http") {
                    cfg.rag.generator.mode = GeneratorConfig::Mode::http;
                } else {
                    throw std::runtime_error("generator mode must be \"stub\" or \"http\"");
                }
                cfg.rag.generator.endpoint = g.value("endpoint", "");
                cfg.rag.generator.bearer_token = g.value("bearer_token", "");
                cfg.rag.generator.max_new_tokens =
                    g.value("max_new_tokens", cfg.rag.generator.max_new_tokens);
                cfg.rag.generator.temperature =
                    g.value("temperature", cfg.rag.generator.temperature);
                cfg.rag.generator.timeout_ms = g.value("timeout_ms", cfg.rag.generator.timeout_ms);
            }
            cfg.rag.validate();
        });
    }

    if (j.contains("output_dir")) {
        errors.attempt("output_dir", [&] { cfg.output_dir = j.at("output_dir").get<std::string>(); });
    }
    if (j.contains("seed")) {
        errors.attempt("seed", [&] { cfg.seed = j.at("seed").get<std::uint64_t>(); });
    }

    for (std::size_t i = 0; i < cfg.specs.size(); ++i) {
        errors.attempt("specs[" + std::to_string(i) + "]", [&] { cfg.specs[i].validate(); });
    }
    errors.throw_if_any();
    return cfg;
}

}  // namespace hybridir
