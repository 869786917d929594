#pragma once

#include <map>
#include <set>
#include <string>

#include "vishape/common.hpp"

namespace vishape {

// Flat key/value configuration with [section] headers; a key "k" under
// [section] becomes "section.k". '#' starts a comment.
class ConfigMap {
 public:
  ConfigMap() = default;
  static ConfigMap parse_file(const std::string& path);
  static ConfigMap parse_text(const std::string& text);

  // "key=value" command-line override
  void set_override(const std::string& keyval);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Rejects keys outside the known set (typo guard).
  void require_known(const std::set<std::string>& known) const;

  // Deterministic key=value echo, one per line, sorted.
  std::string echo() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace vishape
