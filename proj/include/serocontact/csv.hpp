#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "serocontact/common.hpp"

namespace sero::csv {

/// One parsed CSV file: header plus raw string fields per row.
/// The formats in this project are plain comma-separated UTF-8 with a
/// mandatory header and no quoting, so no quote handling is attempted.
struct Table {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based file line for each row (header is line 1).
    std::vector<long> lines;

    std::size_t cols() const { return header.size(); }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

/// Read a CSV file and check its header against the expected column names
/// (exact names, exact order).
inline Table read_table(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    Table table;
    table.path = path.string();
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            table.header = split_line(line);
            for (auto& h : table.header) h = trim(h);
            if (table.header != expected_header) {
                std::string want;
                for (std::size_t i = 0; i < expected_header.size(); ++i)
                    want += (i ? "," : "") + expected_header[i];
                throw ParseError(table.path, 1, "header mismatch, expected: " + want);
            }
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size())
            throw ParseError(table.path, lineno,
                             "expected " + std::to_string(table.header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        for (auto& f : fields) f = trim(f);
        table.rows.push_back(std::move(fields));
        table.lines.push_back(lineno);
    }
    return table;
}

inline double parse_double(const Table& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows[row][col];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(t.path, t.lines[row],
                         "bad numeric value '" + s + "' in column " + t.header[col]);
    return value;
}

inline long parse_long(const Table& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows[row][col];
    long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(t.path, t.lines[row],
                         "bad integer value '" + s + "' in column " + t.header[col]);
    return value;
}

/// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw ConfigError("cannot open file for writing: " + path.string());
    }
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
        : Writer(path) {
        row(header);
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }
private:
    std::ofstream out_;
};

} // namespace sero::csv
