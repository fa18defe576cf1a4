#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ade {

// Raised when the config file cannot be parsed or a typed lookup fails.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat view of an INI/TOML-style file: keys are "section.key" (or bare "key"
// for entries before the first section header). Values keep their raw text;
// typed getters parse on demand.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // CLI overrides: "section.key=value" entries replace file values.
    void set(const std::string& key, const std::string& value);

    // Stable rendering used for hashing into run manifests.
    std::string canonical() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace ade
