#pragma once

// CSV emission with a '#'-prefixed run manifest.
//
// Numbers are written with std::to_chars (shortest round-trip form, no
// locale), so identical inputs give byte-identical files.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rfeh {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

/// Timestamp for manifests. Taken from SOURCE_DATE_EPOCH when set so that
/// reruns stay byte-identical; otherwise omitted.
inline std::optional<std::string> manifest_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (env == nullptr || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const long long secs = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0') return std::nullopt;
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string rate_model;
  std::optional<std::string> timestamp;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> extra;  // command-specific notes
};

inline void write_manifest(std::ostream& os, const RunManifest& m) {
  os << "# tool: rfeh " << kToolVersion << '\n';
  os << "# command: " << m.command << '\n';
  os << "# config: " << m.config_path << '\n';
  os << "# config_hash: " << m.config_hash << '\n';
  os << "# seed: " << m.seed << '\n';
  os << "# rate_model: " << m.rate_model << '\n';
  if (m.timestamp) os << "# timestamp: " << *m.timestamp << '\n';
  for (const auto& o : m.outputs) os << "# output: " << o << '\n';
  for (const auto& [k, v] : m.extra) os << "# " << k << ": " << v << '\n';
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

}  // namespace rfeh
