#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace lnnpinn::io {

/// Flat `key=value` settings.  Lines starting with '#' and blank lines are
/// ignored; whitespace around keys and values is trimmed.  Keys are kept
/// sorted so that written files are stable.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& source = "<stream>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Later values win.
  void merge(const Config& other);
  void erase(const std::string& key) { values_.erase(key); }

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Throws std::invalid_argument for keys outside `allowed`.
void require_known_keys(const Config& config, const std::set<std::string>& allowed, const std::string& what);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace lnnpinn::io
