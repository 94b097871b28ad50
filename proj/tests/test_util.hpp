#pragma once

// Shared test helpers: scratch directories and file fixtures.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

/// Self-cleaning scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("hybridir-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

    /// Writes content under the directory and returns the full path.
    std::string file(const std::string& name, const std::string& content) const;

private:
    std::filesystem::path path_;
};

inline std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string TempDir::file(const std::string& name, const std::string& content) const {
    return write_file((path_ / name).string(), content);
}

}  // namespace testutil
