#include "mdcn/runcfg.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mdcn/errors.hpp"

namespace mdcn {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!cfg.values_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(*v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" +
                      *v + "'");
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const double r = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(*v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + *v +
                      "'");
  }
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
  return get(key).value_or(fallback);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + *v +
                    "'");
}

}  // namespace mdcn
