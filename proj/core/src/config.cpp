#include "ade/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ade {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_quote = !in_quote;
        if (c == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& raw, size_t line_no) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        std::string out;
        for (size_t i = 1; i + 1 < raw.size(); ++i) {
            char c = raw[i];
            if (c == '\\' && i + 2 < raw.size()) {
                char n = raw[++i];
                switch (n) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '\\': out += '\\'; break;
                    case '"': out += '"'; break;
                    default:
                        throw ConfigError("config line " + std::to_string(line_no) +
                                          ": bad escape \\" + std::string(1, n));
                }
            } else {
                out += c;
            }
        }
        return out;
    }
    return raw;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        cfg.values_[full] = unquote(value, line_no);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long Config::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    char* end = nullptr;
    long v = std::strtol(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0')
        throw ConfigError("config key " + key + " is not an integer: " + raw);
    return v;
}

long Config::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    char* end = nullptr;
    double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0')
        throw ConfigError("config key " + key + " is not a number: " + raw);
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    const std::string raw = get_string(key);
    if (raw == "true") return true;
    if (raw == "false") return false;
    throw ConfigError("config key " + key + " is not a bool: " + raw);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::string Config::canonical() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
    return out.str();
}

}  // namespace ade
