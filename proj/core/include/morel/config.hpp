#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "morel/common.hpp"

namespace morel {

// Flat "key = value" configuration with dotted section keys (fhd.q1 = 0.6).
// Every tunable default in the pipeline has a named key here so experiments
// never require a rebuild. Unknown or malformed keys raise ConfigError with
// the offending key; the CLI maps that to exit code 2.
struct ConfigError : Error {
    explicit ConfigError(const std::string& key, const std::string& what)
        : Error(what), offending_key(key) {}
    std::string offending_key;
};

class Config {
public:
    Config();  // defaults only

    // Parses and overlays a config file; keys must exist in the default
    // table. Lines starting with '#' and blank lines are ignored.
    void load_file(const std::filesystem::path& path);
    void load_text(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value);
    void set_unchecked(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    // Serialized in sorted key order; parse(format(x)) == x.
    std::string format() const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> defaults_;
};

}  // namespace morel
