#include "photostat/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace photostat {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str(), path);
}

Config Config::from_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::uint64_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key=value, got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

void Config::apply_env_overrides(const char* prefix) {
    const std::string pre(prefix);
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(0, eq);
        if (name.rfind(pre, 0) != 0) continue;
        std::string key = lower(name.substr(pre.size()));
        if (key.empty()) continue;
        values_[key] = entry.substr(eq + 1);
    }
}

bool Config::has(const std::string& key) const {
    return values_.count(key) != 0;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("missing required config field '" + key + "' (" +
                          origin_ + ")");
    return it->second;
}

double Config::get_double(const std::string& key) const {
    std::string v = get_string(key);
    errno = 0;
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config field '" + key + "' is not a number: '" + v +
                          "'");
    return d;
}

std::int64_t Config::get_int(const std::string& key) const {
    std::string v = get_string(key);
    errno = 0;
    char* end = nullptr;
    long long n = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config field '" + key + "' is not an integer: '" +
                          v + "'");
    return n;
}

std::uint64_t Config::get_uint(const std::string& key) const {
    std::string v = get_string(key);
    if (!v.empty() && v[0] == '-')
        throw ConfigError("config field '" + key + "' must be >= 0, got '" +
                          v + "'");
    errno = 0;
    char* end = nullptr;
    unsigned long long n = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config field '" + key + "' is not an integer: '" +
                          v + "'");
    return n;
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
}
double Config::get_double_or(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
}
std::int64_t Config::get_int_or(const std::string& key,
                                std::int64_t dflt) const {
    return has(key) ? get_int(key) : dflt;
}
std::uint64_t Config::get_uint_or(const std::string& key,
                                  std::uint64_t dflt) const {
    return has(key) ? get_uint(key) : dflt;
}

} // namespace photostat
