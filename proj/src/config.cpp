#include "magtopt/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "magtopt/errors.hpp"
#include "magtopt/util.hpp"

namespace magtopt::config {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", origin, lineno));
    if (c.values_.count(key)) throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, key));
    c.values_[key] = value;
    c.lines_[key] = lineno;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  Config c = parse(read_text_file(path), path.string());
  c.base_dir_ = path.parent_path();
  return c;
}

const std::string* Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = raw(key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback, double lo, double hi) const {
  const auto* v = raw(key);
  if (!v) return fallback;
  double x = 0.0;
  const auto* end = v->data() + v->size();
  const auto [ptr, ec] = std::from_chars(v->data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x))
    throw ConfigError(fmt::format("{}: key '{}' expects a number, got '{}'", origin_, key, *v));
  if (x < lo || x > hi) throw ConfigError(fmt::format("{}: key '{}' = {} outside [{}, {}]", origin_, key, x, lo, hi));
  return x;
}

int Config::get_int(const std::string& key, int fallback, int lo, int hi) const {
  const auto* v = raw(key);
  if (!v) return fallback;
  int x = 0;
  const auto* end = v->data() + v->size();
  const auto [ptr, ec] = std::from_chars(v->data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(fmt::format("{}: key '{}' expects an integer, got '{}'", origin_, key, *v));
  if (x < lo || x > hi) throw ConfigError(fmt::format("{}: key '{}' = {} outside [{}, {}]", origin_, key, x, lo, hi));
  return x;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = raw(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError(fmt::format("{}: key '{}' expects a boolean, got '{}'", origin_, key, *v));
}

std::filesystem::path Config::get_path(const std::string& key) const {
  const auto* v = raw(key);
  if (!v || v->empty()) return {};
  std::filesystem::path p(*v);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

std::string Config::canonical(const std::set<std::string>& exclude) const {
  std::string out;
  for (const auto& [k, v] : values_)
    if (!exclude.count(k)) out += k + " = " + v + "\n";
  return out;
}

std::string Config::hash(const std::set<std::string>& exclude) const { return hex64(fnv1a64(canonical(exclude))); }

}  // namespace magtopt::config
