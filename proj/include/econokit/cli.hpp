#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace econokit::cli {

enum ExitCode : int { exit_ok = 0, exit_data = 1, exit_usage = 2, exit_internal = 70 };

using KeyValues = std::map<std::string, std::string>;

/// A subcommand parameter. Every parameter has a flag (--name), a config key
/// (name), and an environment override (ECONOKIT_NAME, dashes as underscores).
struct Param {
  std::string name;
  std::string default_value;
  std::string help;
  bool is_switch = false;  ///< flag without a value sets "true"
};

/// Parses `key = value` lines ('#' starts a comment) or, when the text is a
/// JSON object, the "config" member of a previously written report.
KeyValues parse_config_text(const std::string& text, const std::string& source = "<config>");
KeyValues load_config_file(const std::string& path);

std::string env_name(const std::string& param);

/// Effective parameter values after merging, lowest to highest precedence:
/// defaults, config file, environment, flags.
class Settings {
 public:
  Settings(const std::vector<Param>& params, const KeyValues& file, const KeyValues& env, const KeyValues& flags);

  const KeyValues& values() const { return values_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  const std::string& str(const std::string& key) const;
  bool has(const std::string& key) const { return !str(key).empty(); }
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::optional<double> optional_number(const std::string& key) const;
  std::optional<std::size_t> optional_count(const std::string& key) const;
  /// Comma-separated list.
  std::vector<std::string> list(const std::string& key) const;

 private:
  KeyValues values_;
  std::vector<std::string> warnings_;
};

/// Parameters accepted by a subcommand, shared ones included.
std::vector<Param> parameters(const std::string& subcommand);
const std::vector<std::string>& subcommands();

/// Full entry point: parses args (without the program name), runs, writes
/// reports into the output directory, and returns the exit code.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const KeyValues& environment);

/// Reads ECONOKIT_* variables from the process environment.
KeyValues process_environment();

}  // namespace econokit::cli
