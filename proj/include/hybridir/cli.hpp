#pragma once

/** \file cli.hpp
 *  \brief Command-line front end: convert | index | search | bench-retriever | bench-rag.
 *
 * Every command validates its whole configuration and loads its inputs
 * before creating or writing any output file. run_cli is callable in
 * process (tests drive it with argument vectors and capture the streams);
 * the binary's main() simply forwards argv.
 */

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corpus.hpp"
#include "eval_runner.hpp"
#include "query_engine.hpp"
#include "rag.hpp"
#include "run_config.hpp"

namespace hybridir {

namespace detail {

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// --spec value: "sextet", "sextet:N" (1-based), or an inline JSON object.
inline std::vector<RetrieverSpec> specs_from_arg(const std::string& arg) {
    if (arg == "sextet") return sextet_presets();
    if (arg.rfind("sextet:", 0) == 0) {
        const std::string num = arg.substr(7);
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(num, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        auto presets = sextet_presets();
        if (used != num.size() || n < 1 || static_cast<std::size_t>(n) > presets.size()) {
            throw std::runtime_error("--spec sextet:N takes N in 1.." +
                                     std::to_string(presets.size()));
        }
        return {presets[static_cast<std::size_t>(n - 1)]};
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(arg);
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("--spec must be \"sextet\", \"sextet:N\" or a JSON object");
    }
    return {RetrieverSpec::from_json(j)};
}

inline void write_reports(const std::string& dir, const EvalReport& report) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_or_throw((base / "report.txt").string(), report_text(report));
    write_or_throw((base / "report.ndjson").string(), report_ndjson(report));
    if (!report.runs.empty()) {
        write_or_throw((base / "run.trec").string(),
                       trec_run_lines(report.runs.front().second, report.runs.front().first));
        if (report.runs.size() > 1) {
            for (const auto& [spec, runs] : report.runs) {
                write_or_throw((base / ("run-" + spec + ".trec")).string(),
                               trec_run_lines(runs, spec));
            }
        }
    }
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"hybrid retrieval engine and benchmark harness"};
    app.require_subcommand(1);

    // convert
    std::string cv_format, cv_input, cv_queries, cv_qrels, cv_output, cv_name;
    auto* convert = app.add_subcommand("convert", "convert a dataset dump to the jsonl/tsv layout");
    convert->add_option("--format", cv_format, "squad | coqa | beir")->required();
    convert->add_option("--input", cv_input, "dataset json, or corpus.jsonl for beir")->required();
    convert->add_option("--queries", cv_queries, "queries.jsonl (beir only)");
    convert->add_option("--qrels", cv_qrels, "qrels.tsv (beir only)");
    convert->add_option("--output", cv_output, "output directory")->required();
    convert->add_option("--name", cv_name, "dataset name (default: format)");

    // index
    std::string ix_corpus, ix_fields = "title,text", ix_output, ix_dense_out, ix_sparse_out;
    double ix_k1 = 1.2, ix_b = 0.75;
    std::size_t ix_embed_dim = 64;
    auto* index_cmd = app.add_subcommand("index", "build and save index artifacts");
    index_cmd->add_option("--corpus", ix_corpus, "corpus.jsonl")->required();
    index_cmd->add_option("--fields", ix_fields, "comma-separated fields (default title,text)");
    index_cmd->add_option("--k1", ix_k1, "bm25 k1");
    index_cmd->add_option("--b", ix_b, "bm25 b");
    index_cmd->add_option("--output", ix_output, "lexical index output path")->required();
    index_cmd->add_option("--dense-out", ix_dense_out, "also write hashed document vectors");
    index_cmd->add_option("--embed-dim", ix_embed_dim, "hashed vector width (default 64)");
    index_cmd->add_option("--sparse-out", ix_sparse_out, "also write tf*idf document expansions");

    // search
    std::string se_config, se_query, se_spec;
    std::size_t se_k = 10;
    auto* search = app.add_subcommand("search", "run one query against a configured dataset");
    search->add_option("--config", se_config, "run config json")->required();
    search->add_option("--query", se_query, "query text")->required();
    search->add_option("--k", se_k, "results to print (default 10)");
    search->add_option("--spec", se_spec, "sextet:N or inline spec JSON (default: first configured)");

    // bench-retriever
    std::string br_config, br_spec, br_output;
    auto* bench_r = app.add_subcommand("bench-retriever", "run retrieval benchmark and write reports");
    bench_r->add_option("--config", br_config, "run config json")->required();
    bench_r->add_option("--spec", br_spec, "override specs: sextet, sextet:N or inline JSON");
    bench_r->add_option("--output-dir", br_output, "override output directory");

    // bench-rag
    std::string bg_config, bg_spec, bg_output, bg_endpoint;
    std::size_t bg_k_contexts = 0, bg_parallelism = 0;
    auto* bench_g = app.add_subcommand("bench-rag", "run the answer benchmark and write reports");
    bench_g->add_option("--config", bg_config, "run config json")->required();
    bench_g->add_option("--spec", bg_spec, "retriever: sextet:N or inline JSON (default: first configured)");
    bench_g->add_option("--output-dir", bg_output, "override output directory");
    bench_g->add_option("--endpoint", bg_endpoint, "http generator endpoint (overrides config/env)");
    bench_g->add_option("--k-contexts", bg_k_contexts, "contexts per prompt");
    bench_g->add_option("--parallelism", bg_parallelism, "worker threads");

    std::vector<std::string> argv_storage;
    argv_storage.push_back("hybridir");
    for (const auto& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (convert->parsed()) {
            BenchmarkBundle bundle;
            if (cv_format == "squad") {
                bundle = convert_squad(cv_input, cv_name.empty() ? "squad" : cv_name);
            } else if (cv_format == "coqa") {
                bundle = convert_coqa(cv_input, cv_name.empty() ? "coqa" : cv_name);
            } else if (cv_format == "beir") {
                if (cv_queries.empty() || cv_qrels.empty()) {
                    throw std::runtime_error("--format beir requires --queries and --qrels");
                }
                bundle = load_beir(cv_input, cv_queries, cv_qrels,
                                   cv_name.empty() ? "beir" : cv_name);
            } else {
                throw std::runtime_error("unknown --format '" + cv_format +
                                         "' (expected squad, coqa or beir)");
            }
            std::filesystem::create_directories(cv_output);
            save_beir(bundle, cv_output);
            out << "dataset: " << bundle.name << "\ndocuments: " << bundle.corpus.size()
                << "\nqueries: " << bundle.queries.size()
                << "\nqrels: " << bundle.qrels.pair_count() << "\nwrote " << cv_output << "\n";
            return 0;
        }

        if (index_cmd->parsed()) {
            Bm25Params params{ix_k1, ix_b};
            params.validate();
            auto corpus = load_corpus_jsonl(ix_corpus);
            auto fields = detail::split_csv(ix_fields);
            auto index = LexicalIndex::build(corpus, fields);
            index.save(ix_output);
            std::size_t terms = 0;
            for (const auto& f : index.fields()) terms += index.terms(f).size();
            out << "documents: " << index.doc_count() << "\nfields: " << fields.size()
                << "\ndistinct terms: " << terms << "\nwrote " << ix_output << "\n";
            if (!ix_dense_out.empty()) {
                DenseStore store;
                for (const auto& d : corpus) {
                    store.add(d.id, toy_embed(IndexSet::joined_fields(d), ix_embed_dim));
                }
                save_dense_vectors(store, ix_dense_out);
                out << "wrote " << ix_dense_out << "\n";
            }
            if (!ix_sparse_out.empty()) {
                TfIdfExpander expander(CorpusStats::from_index(index));
                SparseStore store;
                for (const auto& d : corpus) {
                    auto v = expander.expand(IndexSet::joined_fields(d));
                    if (v.nonzeros() > 0) store.add(d.id, std::move(v));
                }
                save_sparse_vectors(store, ix_sparse_out);
                out << "wrote " << ix_sparse_out << "\n";
            }
            return 0;
        }

        if (search->parsed()) {
            auto cfg = RunConfig::load(se_config);
            auto bundle = cfg.load_bundle();
            auto specs = se_spec.empty() ? cfg.specs : detail::specs_from_arg(se_spec);
            if (specs.empty()) throw std::runtime_error("no retriever spec configured");
            const RetrieverSpec& spec = specs.front();
            if (se_k < 1) throw std::runtime_error("--k must be at least 1");
            IndexSet indexes = IndexSet::build(bundle.corpus, cfg.index);
            auto hits = execute_retriever(spec, indexes.context(), se_query, se_k);
            out << "spec: " << spec.name() << "\n";
            for (const auto& h : hits) {
                out << h.rank << ' ' << h.doc_id << ' ' << double_to_string(h.score) << "\n";
            }
            if (hits.empty()) out << "(no hits)\n";
            return 0;
        }

        if (bench_r->parsed()) {
            auto cfg = RunConfig::load(br_config);
            if (!br_spec.empty()) cfg.specs = detail::specs_from_arg(br_spec);
            if (!br_output.empty()) cfg.output_dir = br_output;
            auto bundle = cfg.load_bundle();
            IndexSet indexes = IndexSet::build(bundle.corpus, cfg.index);
            auto report = run_retriever_benchmark(bundle, cfg.specs, cfg.metrics, indexes);
            detail::write_reports(cfg.output_dir, report);
            out << report_text(report);
            out << "wrote " << cfg.output_dir << "/report.txt, report.ndjson, run.trec\n";
            return 0;
        }

        if (bench_g->parsed()) {
            auto cfg = RunConfig::load(bg_config);
            apply_generator_env(cfg.rag.generator);
            if (!bg_endpoint.empty()) {
                cfg.rag.generator.mode = GeneratorConfig::Mode::http;
                cfg.rag.generator.endpoint = bg_endpoint;
            }
            if (bg_k_contexts > 0) cfg.rag.k_contexts = bg_k_contexts;
            if (bg_parallelism > 0) cfg.rag.parallelism = bg_parallelism;
            if (!bg_output.empty()) cfg.output_dir = bg_output;
            std::vector<RetrieverSpec> specs =
                bg_spec.empty() ? cfg.specs : detail::specs_from_arg(bg_spec);
            if (specs.empty()) throw std::runtime_error("no retriever spec configured");
            auto bundle = cfg.load_bundle();
            IndexSet indexes = IndexSet::build(bundle.corpus, cfg.index);
            auto report = run_rag_benchmark(bundle, specs.front(), indexes, cfg.rag);
            std::filesystem::create_directories(cfg.output_dir);
            const std::filesystem::path base(cfg.output_dir);
            detail::write_or_throw((base / "report.txt").string(), rag_report_text(report));
            detail::write_or_throw((base / "report.ndjson").string(), rag_report_ndjson(report));
            out << rag_report_text(report);
            out << "wrote " << cfg.output_dir << "/report.txt, report.ndjson\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no command selected\n";
    return 1;
}

}  // namespace hybridir
