#pragma once

// Minimal structured-text configuration reader: [section] headers, key =
// value pairs, '#' comments. Keys are addressed as "section.key"; keys
// before any section header have no prefix.

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "mmbeam/errors.hpp"

namespace mmbeam {

class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError(0, "cannot open '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str());
    }

    static KeyValueConfig from_string(const std::string& text) {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw ParseError(lineno, "empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ParseError(lineno, "empty key");
            if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
            const std::string full = section.empty() ? key : section + "." + key;
            cfg.values_[full] = value;
            cfg.lines_[full] = lineno;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size())
                throw ParseError(lines_.at(key), "trailing characters in number '" + it->second + "'");
            return v;
        } catch (const std::invalid_argument&) {
            throw ParseError(lines_.at(key), "not a number: '" + it->second + "'");
        } catch (const std::out_of_range&) {
            throw ParseError(lines_.at(key), "number out of range: '" + it->second + "'");
        }
    }

    int get_int(const std::string& key, int fallback) const {
        const double v = get_double(key, static_cast<double>(fallback));
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw ParseError(lines_.count(key) ? lines_.at(key) : 0,
                             "expected an integer for '" + key + "'");
        return i;
    }

    const std::map<std::string, std::string>& items() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

} // namespace mmbeam
