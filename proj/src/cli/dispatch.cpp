#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "econokit/error.hpp"
#include "econokit/parallel.hpp"

namespace econokit::cli {
namespace fs = std::filesystem;

namespace {

struct Bound {
  std::string value;
  std::vector<std::string> values;
  CLI::Option* option = nullptr;
};

void write_atomically(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path target = dir / name;
  const fs::path tmp = dir / ("." + name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move report into place: '" + target.string() + "'");
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const KeyValues& environment) {
  CLI::App app{"econophysics analysis toolkit", "econokit"};
  app.set_version_flag("--version", ECONOKIT_VERSION);
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::unique_ptr<Bound>>> bound;
  std::map<std::string, std::string> config_path;
  for (const auto& sub : subcommands()) {
    CLI::App* cmd = app.add_subcommand(sub, "run the " + sub + " analysis");
    cmd->add_option("--config", config_path[sub], "key = value config file, or a report JSON to replay");
    for (const auto& p : parameters(sub)) {
      auto b = std::make_unique<Bound>();
      const std::string desc = p.help + (p.default_value.empty() ? "" : " [" + p.default_value + "]");
      if (p.is_switch)
        b->option = cmd->add_flag("--" + p.name + "{true}", b->value, desc);
      else if (p.name == "input")
        b->option = cmd->add_option("--input", b->values, desc);
      else
        b->option = cmd->add_option("--" + p.name, b->value, desc);
      bound[sub][p.name] = std::move(b);
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << ECONOKIT_VERSION << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return exit_usage;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    KeyValues flags;
    for (const auto& [name, b] : bound[sub]) {
      if (b->option->count() == 0) continue;
      if (name == "input") {
        std::string joined;
        for (const auto& v : b->values) joined += (joined.empty() ? "" : ",") + v;
        flags[name] = joined;
      } else {
        flags[name] = b->value;
      }
    }
    const KeyValues file = config_path[sub].empty() ? KeyValues{} : load_config_file(config_path[sub]);
    const auto params = parameters(sub);
    const Settings settings(params, file, environment, flags);

    const std::size_t threads = settings.count("threads");
    if (threads == 0) throw UsageError("--threads must be at least 1");
    set_max_threads(threads);
    const auto formats = settings.list("format");
    for (const auto& f : formats)
      if (f != "json" && f != "csv") throw UsageError("--format entries must be json or csv");

    Output output;
    nlohmann::json results = run_command(sub, settings, output);

    std::vector<std::string> warnings = settings.warnings();
    warnings.insert(warnings.end(), output.warnings.begin(), output.warnings.end());
    nlohmann::json config = nlohmann::json::object();
    for (const auto& [k, v] : settings.values()) config[k] = v;
    nlohmann::json report;
    report["tool"] = "econokit";
    report["version"] = ECONOKIT_VERSION;
    report["subcommand"] = sub;
    report["config"] = config;
    report["results"] = results;
    report["warnings"] = warnings;
    report["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir = settings.str("output-dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "'");
    const bool want_json = std::find(formats.begin(), formats.end(), "json") != formats.end();
    const bool want_csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    if (want_csv)
      for (const auto& [name, content] : output.csv_files) {
        write_atomically(dir, name, content);
        out << (dir / name).string() << '\n';
      }
    if (want_json) {
      write_atomically(dir, sub + ".json", report.dump(2) + "\n");
      out << (dir / (sub + ".json")).string() << '\n';
    }
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    return exit_ok;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
}

}  // namespace econokit::cli
