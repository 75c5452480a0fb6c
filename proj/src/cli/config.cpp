#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "econokit/cli.hpp"
#include "econokit/error.hpp"

extern char** environ;

namespace econokit::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return k;
}

}  // namespace

KeyValues parse_config_text(const std::string& text, const std::string& source) {
  KeyValues kv;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(source + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.contains("config") || !j["config"].is_object()) throw UsageError(source + ": report has no config object");
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw UsageError(source + ": config value for '" + k + "' is not a string");
      kv[normalize_key(k)] = v.get<std::string>();
    }
    return kv;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw UsageError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string env_name(const std::string& param) {
  std::string out = "ECONOKIT_";
  for (char c : param) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

KeyValues process_environment() {
  KeyValues env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("ECONOKIT_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

Settings::Settings(const std::vector<Param>& params, const KeyValues& file, const KeyValues& env,
                   const KeyValues& flags) {
  for (const auto& [key, value] : file) {
    const bool known = std::any_of(params.begin(), params.end(), [&](const Param& p) { return p.name == key; });
    if (!known) throw UsageError("unknown config key '" + key + "'");
  }
  for (const auto& p : params) {
    std::string v = p.default_value;
    const auto f = file.find(p.name);
    if (f != file.end()) v = f->second;
    const auto e = env.find(env_name(p.name));
    if (e != env.end()) v = e->second;
    const auto g = flags.find(p.name);
    if (g != flags.end()) {
      if (f != file.end() && f->second != g->second)
        warnings_.push_back("flag --" + p.name + "=" + g->second + " overrides config file value " + f->second);
      v = g->second;
    }
    values_[p.name] = v;
  }
}

const std::string& Settings::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("parameter '" + key + "' is not declared");
  return it->second;
}

double Settings::number(const std::string& key) const {
  const std::string& s = str(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("--" + key + ": expected a number, got '" + s + "'");
  return v;
}

std::int64_t Settings::integer(const std::string& key) const {
  const std::string& s = str(key);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("--" + key + ": expected an integer, got '" + s + "'");
  return v;
}

std::size_t Settings::count(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw UsageError("--" + key + ": must not be negative");
  return static_cast<std::size_t>(v);
}

bool Settings::flag(const std::string& key) const {
  const std::string s = normalize_key(str(key));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off" || s.empty()) return false;
  throw UsageError("--" + key + ": expected true or false, got '" + str(key) + "'");
}

std::optional<double> Settings::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

std::optional<std::size_t> Settings::optional_count(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return count(key);
}

std::vector<std::string> Settings::list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(str(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace econokit::cli
