#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace photostat {

// All floating-point output goes through this: 12 significant digits, so
// reports and CSVs are byte-stable for identical inputs.
std::string fmt12(double v);

using KvPairs = std::vector<std::pair<std::string, std::string>>;

std::string render_kv(const KvPairs& kv); // "key=value\n" per entry
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit; content fingerprint for run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

} // namespace photostat
