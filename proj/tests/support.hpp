#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cfair/lexicon.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return CFAIR_SOURCE_DIR; }
inline fs::path shipped_lexicon_path() { return source_dir() / "data" / "sgt_nl.csv"; }
inline fs::path shipped_templates_path() { return source_dir() / "data" / "templates_nl.csv"; }
inline fs::path fixture(const std::string &name) { return source_dir() / "tests" / "fixtures" / name; }

inline const cfair::Lexicon &shipped_lexicon() {
    static const cfair::Lexicon lex = cfair::load_lexicon(shipped_lexicon_path());
    return lex;
}

inline cfair::Lexicon lexicon_from(const std::string &csv_body) {
    std::istringstream in("surface,category,pos\n" + csv_body);
    return cfair::parse_lexicon(in);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("cfair-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const fs::path &path() const { return path_; }
    [[nodiscard]] fs::path operator/(const std::string &name) const { return path_ / name; }

    fs::path write(const std::string &name, const std::string &content) const {
        const auto p = path_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testing_support
