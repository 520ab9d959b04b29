#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace magtopt::config {

/// Flat `key = value` file. `#` starts a comment; blank lines are ignored.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback, double lo, double hi) const;
  int get_int(const std::string& key, int fallback, int lo, int hi) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Relative paths resolve against the directory of the config file.
  std::filesystem::path get_path(const std::string& key) const;

  /// Keys that were set but never read.
  std::vector<std::string> unused_keys() const;
  /// Sorted `key = value` lines without the keys in `exclude`.
  std::string canonical(const std::set<std::string>& exclude = {}) const;
  std::string hash(const std::set<std::string>& exclude = {}) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  const std::string* raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_;
  std::filesystem::path base_dir_;
  mutable std::set<std::string> used_;
};

}  // namespace magtopt::config
