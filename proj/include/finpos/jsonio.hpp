#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "finpos/errors.hpp"

namespace finpos {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Fixed 6-decimal formatting for golden-file friendly report output.
inline std::string fixed6(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

// Calls `fn(line_number, parsed)` for every non-empty line of a JSONL file.
inline void for_each_jsonl_line(const std::string& path,
                                const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": JSON parse error: " + e.what());
        }
        fn(lineno, rec);
    }
}

}  // namespace finpos
