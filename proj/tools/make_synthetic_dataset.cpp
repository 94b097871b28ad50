// Regenerates the committed synthetic datasets under a target directory.
// Usage: make_synthetic_dataset <output-root>
// Writes <root>/synthetic/{corpus.jsonl,queries.jsonl,qrels.tsv} and
// <root>/rag/{corpus.jsonl,queries.jsonl,qrels.tsv}.

#include <filesystem>
#include <iostream>

#include <hybridir/synthetic.hpp>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_synthetic_dataset <output-root>\n";
        return 2;
    }
    try {
        const std::filesystem::path root(argv[1]);
        std::filesystem::create_directories(root / "synthetic");
        std::filesystem::create_directories(root / "rag");
        hybridir::save_beir(hybridir::make_synthetic_benchmark(), (root / "synthetic").string());
        hybridir::save_beir(hybridir::make_rag_fixture(), (root / "rag").string());
        std::cout << "wrote " << (root / "synthetic").string() << " and " << (root / "rag").string()
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
