#pragma once
// Sectioned key/value configuration: "[section]" headers, "key = value"
// lines, '#' comments. Flags override file values; every run writes the
// resolved result back out in canonical sorted form.

#include <cstdint>
#include <map>
#include <string>

namespace mc {

class IniConfig {
 public:
  static IniConfig load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set_double(const std::string& section, const std::string& key, double value);
  void set_int(const std::string& section, const std::string& key, std::int64_t value);

  void save(const std::string& path) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace mc
