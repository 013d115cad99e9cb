#include "fragflow/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fragflow {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::pair<std::string, std::string> split_pair(const std::string& text, const std::string& where) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError(where + ": empty key");
  return {key, trim(text.substr(eq + 1))};
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    auto [k, v] = split_pair(line, "line " + std::to_string(number));
    cfg.values_[k] = v;
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void RunConfig::apply_overrides(std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    auto [k, v] = split_pair(o, "override");
    values_[k] = v;
  }
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) {
  auto [it, inserted] = values_.emplace(key, fallback);
  return it->second;
}

std::string RunConfig::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

long RunConfig::get_int(const std::string& key, long fallback) {
  if (!has(key)) values_[key] = std::to_string(fallback);
  return parse_number<long>(key, values_[key]);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) values_[key] = std::to_string(fallback);
  return parse_number<std::uint64_t>(key, values_[key]);
}

double RunConfig::get_double(const std::string& key, double fallback) {
  if (!has(key)) {
    std::ostringstream s;
    s.precision(17);
    s << fallback;
    values_[key] = s.str();
  }
  return parse_number<double>(key, values_[key]);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) values_[key] = fallback ? "true" : "false";
  const std::string& v = values_[key];
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path);
  out << dump();
}

}  // namespace fragflow
