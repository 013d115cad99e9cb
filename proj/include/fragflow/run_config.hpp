#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

namespace fragflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain-text key=value settings. Getters record the default they fall back
/// to, so dump() after a run lists every value the run actually used.
class RunConfig {
 public:
  /// One key=value per line; lines starting with '#' and blank lines are
  /// ignored. A '#' inside a value is kept (SMILES triple bonds).
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Applies "key=value" overrides in order.
  void apply_overrides(std::span<const std::string> overrides);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback);
  std::string require(const std::string& key) const;
  long get_int(const std::string& key, long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string dump() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace fragflow
