#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ssmp/errors.hpp"
#include "ssmp/map_spec.hpp"

namespace ssmp {

/// Parse error carrying the source line and key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Flat `key = value` text. Blank lines and `#` comments are ignored, keys
 * may contain brackets (`jump[0]`), and a repeated key is an error.
 */
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, std::string source = "<text>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// "<source>:<line>: key '<key>': <what>"
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::vector<std::string> keys() const;
  const std::string& source() const noexcept { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries_;
  std::string source_;
};

/// Reads the spec keys (states, Q, drift, sigma, jump[j], switch_jump[j][k], kill_rate)
/// from a parsed file and validates the result.
MapSpec spec_from_config(const KeyValueFile& kv);
MapSpec parse_spec(std::string_view text);
MapSpec load_spec(const std::filesystem::path& path);

/// Text form accepted by parse_spec; numbers round-trip exactly.
std::string spec_to_text(const MapSpec& spec);

}  // namespace ssmp
