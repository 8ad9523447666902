#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "eleson/common.hpp"

namespace eleson {

// Shared `key=value` grammar for scenario and training config files:
// one key per line, '#' starts a comment, blank lines ignored.
inline std::vector<std::pair<std::string, std::string>> read_kv(std::istream& is) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto strip = [](std::string s) {
        const size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

} // namespace eleson
