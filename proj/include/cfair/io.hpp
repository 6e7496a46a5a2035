#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/error.hpp"

namespace cfair::io {

using json = nlohmann::json;

inline std::ifstream open_input(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

inline std::string read_file(const std::filesystem::path &path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path &path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

/// Calls `fn(object, line_no)` for every non-blank line of a JSONL stream.
inline void for_each_jsonl(std::istream &in, const std::function<void(const json &, std::size_t)> &fn,
                           const std::string &source = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error &e) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object()) throw ParseError(source + ":" + std::to_string(line_no) + ": expected a JSON object");
        try {
            fn(obj, line_no);
        } catch (const json::exception &e) {
            throw ShapeError(source + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError &e) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void for_each_jsonl_file(const std::filesystem::path &path,
                                const std::function<void(const json &, std::size_t)> &fn) {
    auto in = open_input(path);
    for_each_jsonl(in, fn, path.string());
}

inline std::string to_jsonl(const std::vector<json> &records) {
    std::string out;
    for (const auto &r : records) {
        out += r.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return ss.str();
}

inline std::string file_digest(const std::filesystem::path &path) { return sha256_hex(read_file(path)); }

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

}  // namespace cfair::io
