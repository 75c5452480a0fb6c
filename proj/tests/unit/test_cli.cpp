#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "econokit/cli.hpp"
#include "econokit/error.hpp"
#include "oracles.hpp"

using namespace econokit;
using namespace econokit::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("econokit_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args, const KeyValues& env = {}) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

fs::path walk_csv(const fs::path& dir, std::size_t n = 1024) {
  const Eigen::VectorXd z = oracle::gaussian(n, 5);
  std::ostringstream s;
  s << "t,price\n";
  double p = 100.0;
  for (std::size_t i = 0; i < n; ++i) {
    p *= 1.0 + 0.01 * z[static_cast<Eigen::Index>(i)];
    s << i << ',' << p << '\n';
  }
  write(dir / "walk.csv", s.str());
  return dir / "walk.csv";
}

fs::path wide_csv(const fs::path& dir) {
  std::ostringstream s;
  s << "t,a,b,c\n";
  double pa = 10, pb = 20, pc = 30;
  const Eigen::VectorXd za = oracle::gaussian(400, 1), zb = oracle::gaussian(400, 2), zc = oracle::gaussian(400, 3);
  for (Eigen::Index i = 0; i < 400; ++i) {
    pa *= 1 + 0.01 * za[i];
    pb *= 1 + 0.01 * zb[i];
    pc *= 1 + 0.01 * zc[i];
    s << i << ',' << pa << ',' << pb << ',' << pc << '\n';
  }
  write(dir / "wide.csv", s.str());
  return dir / "wide.csv";
}

nlohmann::json report(const fs::path& dir, const std::string& sub) { return nlohmann::json::parse(slurp(dir / (sub + ".json"))); }

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\nwindow = 100\n\nrolling_step=5  # trailing\n");
  CHECK(kv.at("window") == "100");
  CHECK(kv.at("rolling-step") == "5");
  CHECK(parse_config_text("").empty());
  CHECK_THROWS_AS(parse_config_text("window 100\n"), UsageError);
  CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), UsageError);
  const auto replay = parse_config_text(R"({"tool": "econokit", "config": {"seed": "7", "agents": "50"}})");
  CHECK(replay.at("seed") == "7");
}

TEST_CASE("settings precedence and warnings") {
  const std::vector<Param> params{{"window", "50", ""}, {"step", "1", ""}, {"kind", "correlation", ""}};
  const Settings s(params, {{"window", "100"}, {"step", "3"}}, {{"ECONOKIT_STEP", "4"}, {"ECONOKIT_KIND", "entropy"}},
                   {{"window", "200"}});
  CHECK(s.count("window") == 200);
  CHECK(s.count("step") == 4);
  CHECK(s.str("kind") == "entropy");
  REQUIRE(s.warnings().size() == 1);
  CHECK(s.warnings()[0].find("window") != std::string::npos);
  const Settings defaults(params, {}, {}, {});
  CHECK(defaults.count("window") == 50);
  CHECK_THROWS_WITH_AS(Settings(params, {{"colour", "blue"}}, {}, {}), doctest::Contains("colour"), UsageError);
  CHECK_THROWS_AS(defaults.number("kind"), UsageError);
  CHECK(env_name("rolling-step") == "ECONOKIT_ROLLING_STEP");
}

TEST_CASE("dfa happy path") {
  TempDir tmp;
  const auto input = walk_csv(tmp.path);
  const auto out = tmp.path / "out";
  const auto r = run({"dfa", "--input", input.string(), "--output-dir", out.string()});
  REQUIRE(r.code == exit_ok);
  const auto j = report(out, "dfa");
  CHECK(j["results"].contains("alpha"));
  CHECK(j["config"]["input"] == input.string());
  CHECK(fs::exists(out / "dfa_curve.csv"));
  // Nothing else appears next to the output directory, and no temporaries remain.
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) entries += e.path().filename() != "walk.csv";
  CHECK(entries == 1);
  for (const auto& e : fs::directory_iterator(out)) CHECK(e.path().filename().string().front() != '.');
}

TEST_CASE("usage and data errors") {
  TempDir tmp;
  const auto input = walk_csv(tmp.path);
  auto r = run({"dfa", "--input", input.string(), "--no-such-flag", "1"});
  CHECK(r.code == exit_usage);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == exit_usage);
  CHECK(run({"frobnicate"}).code == exit_usage);
  CHECK(run({"dfa", "--input", input.string(), "--degree", "two", "--output-dir", (tmp.path / "o").string()}).code ==
        exit_usage);
  CHECK(run({"dfa", "--input", (tmp.path / "missing.csv").string(), "--output-dir", (tmp.path / "o").string()}).code ==
        exit_data);
  write(tmp.path / "bad.csv", "t,v\n1,1\n1,2\n");
  r = run({"dfa", "--input", (tmp.path / "bad.csv").string(), "--output-dir", (tmp.path / "o").string()});
  CHECK(r.code == exit_data);
  CHECK(r.err.find("non-monotone") != std::string::npos);
  CHECK(!fs::exists(tmp.path / "o" / "dfa.json"));
  CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("config file precedence end to end") {
  TempDir tmp;
  const auto input = wide_csv(tmp.path);
  write(tmp.path / "run.conf", "window = 100\nkind = correlation\n");
  write(tmp.path / "empty.conf", "");
  write(tmp.path / "typo.conf", "windw = 100\n");
  const auto out = tmp.path / "out";
  const auto r = run({"distance", "--config", (tmp.path / "run.conf").string(), "--input", input.string(), "--window",
                      "200", "--output-dir", out.string()});
  REQUIRE(r.code == exit_ok);
  const auto j = report(out, "distance");
  CHECK(j["config"]["window"] == "200");
  REQUIRE(j["warnings"].size() >= 1);
  CHECK(j["warnings"][0].get<std::string>().find("window") != std::string::npos);
  CHECK(r.err.find("warning") != std::string::npos);

  const auto e = run({"dfa", "--config", (tmp.path / "empty.conf").string(), "--input", wide_csv(tmp.path).string(),
                      "--output-dir", out.string()});
  CHECK(e.code == exit_ok);
  CHECK(report(out, "dfa")["config"]["degree"] == "1");

  const auto t = run({"distance", "--config", (tmp.path / "typo.conf").string(), "--input", input.string(),
                      "--output-dir", out.string()});
  CHECK(t.code == exit_usage);
  CHECK(t.err.find("windw") != std::string::npos);
}

TEST_CASE("environment overrides the file but not flags") {
  TempDir tmp;
  const auto out = tmp.path / "out";
  write(tmp.path / "w.conf", "agents = 40\nsteps = 2000\n");
  const auto r = run({"wealthsim", "--config", (tmp.path / "w.conf").string(), "--steps", "3000", "--output-dir",
                      out.string()},
                     {{"ECONOKIT_AGENTS", "60"}, {"ECONOKIT_STEPS", "10"}});
  REQUIRE(r.code == exit_ok);
  const auto j = report(out, "wealthsim");
  CHECK(j["config"]["agents"] == "60");
  CHECK(j["config"]["steps"] == "3000");
}

TEST_CASE("seeded runs are byte identical and replayable") {
  TempDir tmp;
  const std::vector<std::string> args{"wealthsim", "--seed", "7", "--agents", "200", "--steps", "20000",
                                      "--savings", "uniform"};
  auto with_dir = [&](const std::string& d) {
    auto a = args;
    a.insert(a.end(), {"--output-dir", (tmp.path / d).string()});
    return a;
  };
  REQUIRE(run(with_dir("a")).code == exit_ok);
  REQUIRE(run(with_dir("b")).code == exit_ok);
  auto ja = report(tmp.path / "a", "wealthsim");
  auto jb = report(tmp.path / "b", "wealthsim");
  CHECK(ja["results"].dump() == jb["results"].dump());
  CHECK(slurp(tmp.path / "a" / "wealth_histogram.csv") == slurp(tmp.path / "b" / "wealth_histogram.csv"));

  const auto replay = tmp.path / "replay";
  REQUIRE(run({"wealthsim", "--config", (tmp.path / "a" / "wealthsim.json").string(), "--output-dir", replay.string()})
              .code == exit_ok);
  CHECK(report(replay, "wealthsim")["results"].dump() == ja["results"].dump());

  auto seed8 = args;
  seed8[2] = "8";
  seed8.insert(seed8.end(), {"--output-dir", (tmp.path / "c").string()});
  REQUIRE(run(seed8).code == exit_ok);
  CHECK(report(tmp.path / "c", "wealthsim")["results"].dump() != ja["results"].dump());
}

TEST_CASE("format selection") {
  TempDir tmp;
  const auto input = walk_csv(tmp.path);
  const auto out = tmp.path / "out";
  REQUIRE(run({"zipf", "--input", input.string(), "--format", "csv", "--output-dir", out.string()}).code == exit_ok);
  CHECK(fs::exists(out / "zipf_rank.csv"));
  CHECK(!fs::exists(out / "zipf.json"));
  CHECK(run({"zipf", "--input", input.string(), "--format", "xml", "--output-dir", out.string()}).code == exit_usage);
}
