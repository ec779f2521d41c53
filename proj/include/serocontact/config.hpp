#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/common.hpp"

namespace sero {

/// Sectioned key=value configuration text. Lines starting with '#' or ';'
/// are comments, '[name]' opens a section, values keep internal whitespace.
class Config {
public:
    Config() = default;

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    static Config parse(const std::string& text, const std::string& origin = "<config>") {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty())
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": empty section name");
                cfg.sections_[section];
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            auto& sec = cfg.sections_[section];
            if (sec.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "' in section [" + section + "]");
            sec[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key))
            throw ConfigError("config: missing [" + section + "] " + key);
        return s->second.at(key);
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? get_string(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return to_double(get_string(section, key), section, key);
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    long get_long(const std::string& section, const std::string& key) const {
        std::string v = get_string(section, key);
        char* end = nullptr;
        long out = std::strtol(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError("config: [" + section + "] " + key + " must be an integer, got '" +
                              v + "'");
        return out;
    }

    long get_long(const std::string& section, const std::string& key, long fallback) const {
        return has(section, key) ? get_long(section, key) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get_string(section, key);
        for (auto& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError("config: [" + section + "] " + key + " must be a boolean, got '" + v +
                          "'");
    }

    std::vector<std::string> get_string_list(const std::string& section,
                                             const std::string& key) const {
        std::vector<std::string> out;
        std::string v = get_string(section, key);
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) {
            std::string t = trim(item);
            if (!t.empty()) out.push_back(t);
        }
        if (out.empty())
            throw ConfigError("config: [" + section + "] " + key + " is an empty list");
        return out;
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : get_string_list(section, key))
            out.push_back(to_double(item, section, key));
        return out;
    }

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& v, const std::string& section,
                            const std::string& key) {
        char* end = nullptr;
        double out = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError("config: [" + section + "] " + key + " must be a number, got '" +
                              v + "'");
        return out;
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace sero
