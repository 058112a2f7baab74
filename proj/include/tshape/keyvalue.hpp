#pragma once

// Plain-text `key = value` documents used for configs, reports, manifests
// and checkpoints. Lines starting with '#' and blank lines are ignored;
// insertion order is preserved on output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tshape {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text);
  static KeyValueDoc load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  void set(std::string key, double value) { set(std::move(key), format_double(value)); }
  void set_int(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }

  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;
  const std::string& at(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace tshape
