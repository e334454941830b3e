#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "assure/errors.hpp"

namespace assure {

/*
 * Minimal INI-style run configuration:
 *
 *   # comment
 *   [section]
 *   key = value
 *
 * Values are read through typed getters that raise line-numbered ConfigError
 * on problems; finalize() rejects keys that no getter consumed, so typos
 * fail loudly.
 */
class IniConfig {
  public:
    static IniConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        return parse_stream(in, path);
    }

    static IniConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse_stream(in, "<inline>");
    }

    static IniConfig parse_stream(std::istream& in, const std::string& origin) {
        IniConfig cfg;
        cfg.origin_ = origin;
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ConfigError("unterminated section header", line_no);
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty()) throw ConfigError("empty section name", line_no);
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value", line_no);
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("empty key", line_no);
            if (section.empty()) throw ConfigError("key outside any [section]", line_no);
            auto& entry = cfg.entries_[section + "." + key];
            entry.value = value;
            entry.line = line_no;
            entry.used = false;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        return entries_.count(section + "." + key) > 0;
    }

    bool has_section(const std::string& section) const {
        const std::string prefix = section + ".";
        auto it = entries_.lower_bound(prefix);
        return it != entries_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        return entry(section, key).value;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? get_string(section, key) : fallback;
    }

    double get_real(const std::string& section, const std::string& key) const {
        const auto& e = entry(section, key);
        return parse_real(e.value, e.line);
    }

    double get_real(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_real(section, key) : fallback;
    }

    long get_int(const std::string& section, const std::string& key) const {
        const auto& e = entry(section, key);
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(e.value, &pos);
        } catch (...) {
            throw ConfigError("expected integer for " + section + "." + key, e.line);
        }
        if (pos != e.value.size())
            throw ConfigError("trailing characters after integer for " + section + "." + key,
                              e.line);
        return v;
    }

    long get_int(const std::string& section, const std::string& key, long fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        std::string v = e.value;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("expected boolean for " + section + "." + key, e.line);
    }

    // Comma/space separated list of reals.
    std::vector<double> get_real_list(const std::string& section, const std::string& key) const {
        const auto& e = entry(section, key);
        std::vector<double> out;
        std::string item;
        std::istringstream ss(normalise_separators(e.value));
        while (ss >> item) out.push_back(parse_real(item, e.line));
        if (out.empty()) throw ConfigError("empty list for " + section + "." + key, e.line);
        return out;
    }

    std::vector<long> get_int_list(const std::string& section, const std::string& key) const {
        const auto& e = entry(section, key);
        std::vector<long> out;
        std::string item;
        std::istringstream ss(normalise_separators(e.value));
        while (ss >> item) {
            try {
                out.push_back(std::stol(item));
            } catch (...) {
                throw ConfigError("expected integer list for " + section + "." + key, e.line);
            }
        }
        if (out.empty()) throw ConfigError("empty list for " + section + "." + key, e.line);
        return out;
    }

    int line_of(const std::string& section, const std::string& key) const {
        return entry(section, key).line;
    }

    // Call after all getters: every key present in the file must have been read.
    void finalize() const {
        for (const auto& [name, e] : entries_) {
            if (!e.used)
                throw ConfigError("unknown or unused key '" + name + "'", e.line);
        }
    }

    const std::string& origin() const { return origin_; }

  private:
    struct Entry {
        std::string value;
        int line = -1;
        mutable bool used = false;
    };

    const Entry& entry(const std::string& section, const std::string& key) const {
        const auto it = entries_.find(section + "." + key);
        if (it == entries_.end())
            throw ConfigError("missing required key " + section + "." + key);
        it->second.used = true;
        return it->second;
    }

    static double parse_real(const std::string& s, int line) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (...) {
            throw ConfigError("expected number, got '" + s + "'", line);
        }
        if (pos != s.size()) throw ConfigError("trailing characters after number '" + s + "'", line);
        return v;
    }

    static std::string strip_comment(const std::string& s) {
        bool in_quote = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_quote = !in_quote;
            if (!in_quote && (s[i] == '#' || s[i] == ';')) return s.substr(0, i);
        }
        return s;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::string normalise_separators(std::string s) {
        for (auto& c : s)
            if (c == ',') c = ' ';
        return s;
    }

    std::string origin_;
    std::map<std::string, Entry> entries_;
};

}  // namespace assure
