// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal helpers for the line-oriented text formats.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "replaylab/error.hpp"

namespace replaylab::textio {

/// 17 significant digits: every finite double survives a write/read cycle.
inline std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw IoError("not a number: '" + token + "'");
    return v;
}

inline long long parse_int(const std::string& token) {
    char* end = nullptr;
    const long long v = std::strtoll(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0') throw IoError("not an integer: '" + token + "'");
    return v;
}

inline std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

/// Value of `key=value` among whitespace-separated tokens; throws if absent.
inline std::string keyed(const std::vector<std::string>& tokens, std::string_view key) {
    for (const auto& t : tokens) {
        if (t.size() > key.size() && t.compare(0, key.size(), key) == 0 && t[key.size()] == '=')
            return t.substr(key.size() + 1);
    }
    throw IoError("missing field '" + std::string(key) + "'");
}

}  // namespace replaylab::textio
