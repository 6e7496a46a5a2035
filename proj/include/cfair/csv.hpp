#pragma once

// Small CSV reader for the lexicon and template data files: comma separated,
// optional double-quoted fields ("" escapes a quote), `#` comment lines and
// blank lines skipped. Records never span lines.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "cfair/error.hpp"

namespace cfair::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> fields;
};

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && trim(cur).empty()) {
            quoted = true;
            was_quoted = true;
            cur.clear();
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(was_quoted ? cur : trim(cur));
    return fields;
}

/// Reads all rows; the first non-comment row must equal `header`.
inline std::vector<Row> read(std::istream &in, const std::vector<std::string> &header) {
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_line(line, line_no);
        if (!saw_header) {
            if (fields != header) {
                std::string expected;
                for (const auto &h : header) expected += (expected.empty() ? "" : ",") + h;
                throw ParseError("line " + std::to_string(line_no) + ": expected header '" + expected + "'");
            }
            saw_header = true;
            continue;
        }
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        }
        rows.push_back({line_no, std::move(fields)});
    }
    if (!saw_header) throw ParseError("missing header row");
    return rows;
}

}  // namespace cfair::csv
