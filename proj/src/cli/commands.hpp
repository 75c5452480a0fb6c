#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "econokit/cli.hpp"

namespace econokit::cli {

/// Files and warnings produced by one command; written only after success.
struct Output {
  std::vector<std::pair<std::string, std::string>> csv_files;  ///< (file name, content)
  std::vector<std::string> warnings;
};

nlohmann::json run_command(const std::string& subcommand, const Settings& settings, Output& output);

}  // namespace econokit::cli
