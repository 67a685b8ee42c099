#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "slp/error.hpp"

namespace slp {

// Flat key/value store read from a TOML-style file: [section] headers,
// `key = value` lines, # comments. Values: strings, integers, floats,
// booleans and flat arrays. Keys are stored fully dotted
// ("img.clahe.clip"), which is all the pipeline needs.
class Config {
public:
    using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                               std::vector<std::string>>;

    Config() = default;

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str(), path);
    }

    static Config from_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        std::string section;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated section");
                section = strip(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = strip(s.substr(0, eq));
            std::string val = strip(s.substr(eq + 1));
            if (key.empty())
                throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
            std::string full = section.empty() ? key : section + "." + key;
            cfg.values_[full] = parse_value(val, origin, lineno);
        }
        return cfg;
    }

    // Applies a `key=value` override (CLI --set). Value syntax as in the file.
    void set_override(const std::string& expr) {
        auto eq = expr.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + expr + "'");
        values_[strip(expr.substr(0, eq))] = parse_value(strip(expr.substr(eq + 1)), "<set>", 0);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::int64_t get_int(const std::string& key, std::int64_t def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<std::int64_t>(&it->second)) return *p;
        if (auto p = std::get_if<double>(&it->second)) return std::int64_t(*p);
        throw ConfigError("config key '" + key + "' is not an integer");
    }

    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<double>(&it->second)) return *p;
        if (auto p = std::get_if<std::int64_t>(&it->second)) return double(*p);
        throw ConfigError("config key '" + key + "' is not a number");
    }

    bool get_bool(const std::string& key, bool def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<bool>(&it->second)) return *p;
        throw ConfigError("config key '" + key + "' is not a boolean");
    }

    std::string get_str(const std::string& key, const std::string& def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<std::string>(&it->second)) return *p;
        throw ConfigError("config key '" + key + "' is not a string");
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> def = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<std::vector<double>>(&it->second)) return *p;
        if (auto p = std::get_if<double>(&it->second)) return {*p};
        if (auto p = std::get_if<std::int64_t>(&it->second)) return {double(*p)};
        throw ConfigError("config key '" + key + "' is not a numeric array");
    }

    std::vector<std::string> get_strs(const std::string& key,
                                      std::vector<std::string> def = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto p = std::get_if<std::vector<std::string>>(&it->second)) return *p;
        if (auto p = std::get_if<std::string>(&it->second)) return {*p};
        throw ConfigError("config key '" + key + "' is not a string array");
    }

    std::string require_str(const std::string& key) const {
        if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
        return get_str(key, "");
    }

    // Deterministic re-emission, used for config snapshots.
    std::string dump() const {
        std::ostringstream out;
        for (const auto& [k, v] : values_) {
            out << k << " = ";
            if (auto p = std::get_if<bool>(&v))
                out << (*p ? "true" : "false");
            else if (auto p = std::get_if<std::int64_t>(&v))
                out << *p;
            else if (auto p = std::get_if<double>(&v))
                out << format_double(*p);
            else if (auto p = std::get_if<std::string>(&v))
                out << '"' << *p << '"';
            else if (auto p = std::get_if<std::vector<double>>(&v)) {
                out << '[';
                for (std::size_t i = 0; i < p->size(); ++i)
                    out << (i ? ", " : "") << format_double((*p)[i]);
                out << ']';
            } else if (auto p = std::get_if<std::vector<std::string>>(&v)) {
                out << '[';
                for (std::size_t i = 0; i < p->size(); ++i)
                    out << (i ? ", " : "") << '"' << (*p)[i] << '"';
                out << ']';
            }
            out << '\n';
        }
        return out.str();
    }

private:
    static std::string strip(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    // Drops a trailing # comment, respecting quoted strings.
    static std::string strip_comment(const std::string& s) {
        bool in_str = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_str = !in_str;
            if (s[i] == '#' && !in_str) return s.substr(0, i);
        }
        return s;
    }

    static std::string format_double(double d) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", d);
        return buf;
    }

    static Value parse_value(const std::string& raw, const std::string& origin, int lineno) {
        auto fail = [&](const std::string& why) -> ParseError {
            return ParseError(origin + ":" + std::to_string(lineno) + ": " + why);
        };
        if (raw.empty()) throw fail("empty value");
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') throw fail("unterminated string");
            return raw.substr(1, raw.size() - 2);
        }
        if (raw == "true") return true;
        if (raw == "false") return false;
        if (raw.front() == '[') {
            if (raw.back() != ']') throw fail("unterminated array");
            std::string body = strip(raw.substr(1, raw.size() - 2));
            std::vector<std::string> items;
            std::string cur;
            bool in_str = false;
            for (char ch : body) {
                if (ch == '"') in_str = !in_str;
                if (ch == ',' && !in_str) {
                    items.push_back(strip(cur));
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            if (!strip(cur).empty()) items.push_back(strip(cur));
            bool all_strings = !items.empty();
            for (const auto& it : items)
                if (it.empty() || it.front() != '"') all_strings = false;
            if (all_strings) {
                std::vector<std::string> out;
                for (const auto& it : items) out.push_back(it.substr(1, it.size() - 2));
                return out;
            }
            std::vector<double> out;
            for (const auto& it : items) {
                try {
                    out.push_back(std::stod(it));
                } catch (...) {
                    throw fail("bad array element '" + it + "'");
                }
            }
            return out;
        }
        // Bare scalar: integer if it parses exactly as one, else float.
        try {
            std::size_t pos = 0;
            long long i = std::stoll(raw, &pos);
            if (pos == raw.size()) return std::int64_t(i);
        } catch (...) {
        }
        try {
            std::size_t pos = 0;
            double d = std::stod(raw, &pos);
            if (pos == raw.size()) return d;
        } catch (...) {
        }
        throw fail("cannot parse value '" + raw + "'");
    }

    std::map<std::string, Value> values_;
};

}  // namespace slp
