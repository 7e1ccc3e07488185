#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fcp/errors.hpp"

namespace fcp::csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number of each row in the source file, for error reporting.
    std::vector<std::size_t> line_numbers;
};

// Reads a comma-separated UTF-8 file with a mandatory header row.
// Accepts LF and CRLF endings; blank trailing lines are ignored.
inline Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileMissing(path);
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split_line(line);
        } else {
            t.rows.push_back(split_line(line));
            t.line_numbers.push_back(lineno);
        }
    }
    if (t.header.empty()) throw ParseError(path, 0, "empty file, expected header row");
    return t;
}

inline void expect_header(const Table& t, const std::vector<std::string>& expected,
                          const std::string& path) {
    if (t.header.size() < expected.size())
        throw ParseError(path, 1, "header has too few columns");
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (t.header[i] != expected[i])
            throw ParseError(path, 1, "expected header column '" + expected[i] +
                                          "', found '" + t.header[i] + "'");
}

inline long parse_long(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path, line, "expected integer, found '" + s + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path, line, "expected number, found '" + s + "'");
    }
}

// Atomic write: contents land at `path` fully or not at all.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FcpError("cannot open for writing: " + tmp);
        out << contents;
        if (!out) throw FcpError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace fcp::csv
