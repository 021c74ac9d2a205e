#pragma once

// Minimal CSV support for the input/output formats used here: UTF-8, comma
// separated, '.' decimal point, no quoting (none of the fields need it).

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace cholcast::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number per row, for error messages.
    std::vector<size_t> line_numbers;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline Table parse(std::istream& in, const std::string& source_name) {
    Table t;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (line_no == 1) {
            t.header = std::move(fields);
            continue;
        }
        if (t.header.empty()) fail_data(source_name + ": missing header row");
        if (fields.size() != t.header.size())
            fail_data("MalformedRow: " + source_name + " line " + std::to_string(line_no) +
                      ": expected " + std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) fail_data(source_name + ": empty file (header row required)");
    return t;
}

inline Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("cannot open file: " + path);
    return parse(in, path);
}

inline Table parse_string(const std::string& text, const std::string& source_name = "<string>") {
    std::istringstream in(text);
    return parse(in, source_name);
}

inline double parse_double(const std::string& s, const std::string& source_name, size_t line_no) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
        fail_data("MalformedRow: " + source_name + " line " + std::to_string(line_no) +
                  ": not a number: '" + s + "'");
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("cannot write file: " + path);
    out << content;
    if (!out) fail_data("write failed: " + path);
}

} // namespace cholcast::csv
