#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace mdcn {

/// Flat key=value run configuration. Lines are trimmed; blank lines and
/// '#' comments are ignored; duplicate keys and lines without '=' are
/// rejected with the offending line number.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text, const std::string& origin);
  static KvConfig parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace mdcn
