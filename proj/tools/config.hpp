#pragma once

// INI-style run configuration: `[section]` headers and `key = value` lines,
// addressed as "section.key". Overrides from the command line use the same
// dotted keys.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"

namespace latticeqo::cli {

namespace pt = boost::property_tree;

struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(sep, start), s.size());
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

class Config {
 public:
  Config() = default;
  Config(pt::ptree tree, std::filesystem::path base_dir) : tree_(std::move(tree)), base_(std::move(base_dir)) {}

  static Config load(const std::filesystem::path& file) {
    pt::ptree tree;
    try {
      pt::read_ini(file.string(), tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("config: " + std::string(e.what()));
    }
    return {std::move(tree), file.parent_path()};
  }

  // "section.key=value"
  void apply_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(text) + "' is not key=value");
    const auto key = trim(text.substr(0, eq));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos)
      throw ConfigError("override key '" + key + "' must have the form section.key");
    tree_.put(key, trim(text.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }
  bool has_section(const std::string& name) const { return static_cast<bool>(tree_.get_child_optional(name)); }

  std::optional<std::string> find_string(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require_string(const std::string& key) const {
    auto v = find_string(key);
    if (!v || v->empty()) throw ConfigError("config: missing required field '" + key + "'");
    return *v;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto v = find_string(key);
    return v && !v->empty() ? *v : fallback;
  }

  std::optional<double> find_double(const std::string& key) const {
    auto v = find_string(key);
    if (!v) return std::nullopt;
    double x = 0.0;
    const auto* first = v->data();
    const auto* last = first + v->size();
    const auto [p, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || p != last || !std::isfinite(x))
      throw ConfigError("config: field '" + key + "' is not a number: '" + *v + "'");
    return x;
  }

  double get_double(const std::string& key, double fallback) const { return find_double(key).value_or(fallback); }

  double require_double(const std::string& key) const {
    auto v = find_double(key);
    if (!v) throw ConfigError("config: missing required field '" + key + "'");
    return *v;
  }

  std::optional<long> find_int(const std::string& key) const {
    auto v = find_string(key);
    if (!v) return std::nullopt;
    long x = 0;
    const auto* first = v->data();
    const auto* last = first + v->size();
    const auto [p, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || p != last) throw ConfigError("config: field '" + key + "' is not an integer: '" + *v + "'");
    return x;
  }

  long get_int(const std::string& key, long fallback) const { return find_int(key).value_or(fallback); }

  long require_int(const std::string& key) const {
    auto v = find_int(key);
    if (!v) throw ConfigError("config: missing required field '" + key + "'");
    return *v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = find_string(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("config: field '" + key + "' is not a boolean: '" + *v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto v = find_string(key);
    if (!v) return out;
    for (const auto& item : split_list(*v)) {
      double x = 0.0;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (ec != std::errc() || p != item.data() + item.size())
        throw ConfigError("config: field '" + key + "' has a non-numeric entry '" + item + "'");
      out.push_back(x);
    }
    return out;
  }

  // Copy of this configuration with every `key = value` of `section` applied
  // as an override. Used for sweep series.
  Config with_section_overrides(const std::string& section) const {
    auto child = tree_.get_child_optional(section);
    if (!child) throw ConfigError("config: missing section [" + section + "]");
    Config out = *this;
    for (const auto& [key, value] : *child) out.apply_override(key + "=" + value.data());
    return out;
  }

  std::filesystem::path resolve_path(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_ / path;
  }

  // Canonical text of the effective configuration, in file order.
  std::string canonical() const {
    std::ostringstream os;
    for (const auto& [section, child] : tree_) {
      if (child.empty()) {
        os << section << '=' << trim(child.data()) << '\n';
        continue;
      }
      os << '[' << section << "]\n";
      for (const auto& [key, value] : child) os << key << '=' << trim(value.data()) << '\n';
    }
    return os.str();
  }

  std::string hash() const { return fnv1a_hex(canonical()); }

 private:
  pt::ptree tree_;
  std::filesystem::path base_;
};

}  // namespace latticeqo::cli
