#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qest/io.hpp"

namespace qest {

// Raised on malformed config text; the message carries the line number.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Flat key=value configuration with optional [section] headers. A key inside
// [sweep] is addressed as "sweep.key". '#' starts a comment anywhere on a
// line. Later assignments override earlier ones, which is how command-line
// flags layer on top of file values.
class Config {
  public:
    static Config parse(std::istream& in, const std::string& origin = "config") {
        Config cfg;
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw config_error(origin + " line " + std::to_string(line_no) +
                                       ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty())
                    throw config_error(origin + " line " + std::to_string(line_no) +
                                       ": empty section name");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error(origin + " line " + std::to_string(line_no) +
                                   ": expected key=value");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw config_error(origin + " line " + std::to_string(line_no) +
                                   ": empty key");
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file " + path);
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw config_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::uint64_t get_u64(const std::string& key) const {
        const std::string s = get_string(key);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0')
            throw config_error("config: key '" + key + "' is not an integer: '" + s + "'");
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? get_u64(key) : fallback;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& tok : split(get_string(key), ','))
            out.push_back(to_double(key, trim(tok)));
        return out;
    }

    const std::map<std::string, std::string>& items() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& key, const std::string& s) {
        try {
            return parse_double(s);
        } catch (const std::runtime_error&) {
            throw config_error("config: key '" + key + "' is not a number: '" + s + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace qest
