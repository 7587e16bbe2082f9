#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace photostat {

// User-facing configuration defect; the message names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value text config. '#' starts a comment, blank lines ignored,
// whitespace around key and value trimmed. Environment variables override
// file values: PHOTOSTAT_<KEY uppercased> (e.g. PHOTOSTAT_SEED -> seed).
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text, const std::string& origin);

    void apply_env_overrides(const char* prefix = "PHOTOSTAT_");

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    // required accessors throw ConfigError naming the field
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;

    std::string get_string_or(const std::string& key, const std::string& dflt) const;
    double get_double_or(const std::string& key, double dflt) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t dflt) const;
    std::uint64_t get_uint_or(const std::string& key, std::uint64_t dflt) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_ = "<none>";
};

} // namespace photostat
