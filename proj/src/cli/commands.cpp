#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "econokit/distance.hpp"
#include "econokit/dfa.hpp"
#include "econokit/error.hpp"
#include "econokit/lppl.hpp"
#include "econokit/portfolio.hpp"
#include "econokit/series.hpp"
#include "econokit/wealth.hpp"
#include "econokit/zipf.hpp"

namespace econokit::cli {

using nlohmann::json;

namespace {

const std::vector<Param>& common_output() {
  static const std::vector<Param> p{
      {"output-dir", "econokit-out", "directory for reports (created if missing)"},
      {"format", "json,csv", "comma-separated output formats: json, csv"},
      {"threads", "1", "maximum worker threads"},
  };
  return p;
}

const std::vector<Param>& common_input() {
  static const std::vector<Param> p{
      {"input", "", "input CSV path(s), comma-separated or repeated"},
      {"time-column", "0", "time column name or zero-based index"},
      {"value-column", "1", "value column name or zero-based index"},
      {"delimiter", ",", "CSV field delimiter"},
      {"gap", "reject", "missing data policy: reject or forward-fill"},
  };
  return p;
}

std::vector<Param> specific(const std::string& sub) {
  if (sub == "dfa")
    return {
        {"degree", "1", "detrending polynomial degree"},
        {"alignment", "newest", "box alignment: newest or oldest"},
        {"boxes", "", "explicit comma-separated box sizes"},
        {"box-min", "", "smallest box size of the default schedule"},
        {"box-max", "", "largest box size of the default schedule"},
        {"fit-min", "", "smallest box size used in the exponent fit"},
        {"fit-max", "", "largest box size used in the exponent fit"},
        {"transform", "none", "signal from values: none, simple, log or difference returns"},
        {"rolling-window", "0", "rolling exponent window length (0 disables)"},
        {"rolling-step", "1", "rolling exponent step"},
    };
  if (sub == "lppl")
    return {
        {"mode", "split", "fit mode: split or full"},
        {"form", "log", "divergence form: power or log"},
        {"oscillation", "cos", "oscillation term: cos or linear"},
        {"t-c-min", "", "critical-time grid start"},
        {"t-c-max", "", "critical-time grid end"},
        {"t-c-points", "200", "critical-time grid points"},
        {"t-c-horizon", "0.5", "default grid reach beyond the window, as a fraction of its length"},
        {"omega-min", "4", "angular log-frequency grid start"},
        {"omega-max", "25", "angular log-frequency grid end"},
        {"omega-points", "100", "angular log-frequency grid points"},
        {"m-min", "0.05", "power-form exponent grid start"},
        {"m-max", "0.95", "power-form exponent grid end"},
        {"m-points", "50", "power-form exponent grid points"},
        {"refine", "21", "refinement grid points per dimension (0 disables)"},
        {"polish", "true", "bounded line-search polish after refinement"},
        {"min-r2", "0.5", "divergence R^2 below which a split fit is low-confidence"},
        {"track", "false", "run the crash-risk track over growing or rolling windows", true},
        {"policy", "growing", "track window policy: growing or rolling"},
        {"window", "0", "track window length (points)"},
        {"step", "5", "track step between window ends"},
        {"k", "5", "trailing windows tested for gap convergence"},
        {"threshold", "5", "convergence threshold on |gap|"},
        {"rule", "trend", "gap convergence rule: trend|strict"},
        {"tolerance", "1", "slack for the strict rule and near-to-crash detection"},
    };
  if (sub == "zipf")
    return {
        {"alphabet", "2", "alphabet size: 2, 3 or 5"},
        {"thresholds", "", "comma-separated letter thresholds (default: quantiles of |r|)"},
        {"word-length", "3", "letters per word"},
        {"overlap", "true", "count overlapping words"},
        {"returns", "simple", "return kind: simple, log or difference"},
        {"keep-hapax", "false", "include words seen once in the rank fit", true},
        {"rank-min", "1", "first rank of the fit"},
        {"rank-max", "", "last rank of the fit"},
        {"tail", "0.5", "fraction of distinct frequencies in the tail fit"},
    };
  if (sub == "backtest")
    return {
        {"market", "", "market series: a path, or the label of one input series"},
        {"train", "", "train window first:last (dates or integers)"},
        {"trade", "", "trade window first:last (dates or integers)"},
        {"alphabet", "2", "alphabet size: 2, 3 or 5"},
        {"thresholds", "", "comma-separated letter thresholds (default: train quantiles)"},
        {"word-length", "3", "letters per word"},
        {"overlap", "true", "count overlapping words"},
        {"weighting", "equal", "position sizing: equal or confidence"},
        {"margin", "0", "minimum P(u) - P(d) gap before acting"},
        {"allow-short", "false", "sell signals go short instead of to cash", true},
        {"capital", "1", "initial capital"},
        {"periods-per-year", "252", "annualisation factor"},
        {"refresh-lag", "", "rebuild word tables each step from data this many steps old"},
    };
  if (sub == "distance")
    return {
        {"kind", "correlation", "distance kind: correlation or entropy"},
        {"window", "", "window length (points)"},
        {"step", "", "step between windows (default: window length)"},
        {"subset", "", "comma-separated labels for the mean-distance track"},
        {"block", "2", "entropy block length"},
        {"mst", "false", "build the minimum spanning tree of the last window", true},
    };
  if (sub == "wealthsim")
    return {
        {"agents", "500", "number of agents"},
        {"total", "", "total money (default: one unit per agent)"},
        {"steps", "1000000", "pairwise exchanges"},
        {"savings", "none", "savings propensity: none, fixed:<s> or uniform"},
        {"tax", "0", "fraction of each exchanged pool removed"},
        {"seed", "1", "random seed"},
        {"snapshots", "10", "evenly spaced snapshots"},
        {"bins", "50", "histogram bins"},
        {"tail", "0.1", "richest fraction used in the tail fit"},
    };
  throw UsageError("unknown subcommand '" + sub + "'");
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) { return format_double(v); }

CsvOptions csv_options(const Settings& s) {
  CsvOptions o;
  o.time_column = s.str("time-column");
  o.value_column = s.str("value-column");
  const std::string& d = s.str("delimiter");
  if (d.size() != 1) throw UsageError("--delimiter must be a single character");
  o.delimiter = d[0];
  const std::string& g = s.str("gap");
  if (g == "reject") o.gap_policy = GapPolicy::reject;
  else if (g == "forward-fill" || g == "forward_fill") o.gap_policy = GapPolicy::forward_fill;
  else throw UsageError("--gap must be reject or forward-fill");
  return o;
}

TimeSeries single_input(const Settings& s) {
  const auto inputs = s.list("input");
  if (inputs.size() != 1) throw UsageError("--input: exactly one input file required");
  return load_csv(inputs[0], csv_options(s));
}

/// One file per series (labelled by file stem), or one wide file.
std::vector<TimeSeries> series_set(const Settings& s) {
  const auto inputs = s.list("input");
  if (inputs.empty()) throw UsageError("--input: at least one input file required");
  const CsvOptions o = csv_options(s);
  if (inputs.size() == 1) return load_wide_csv(inputs[0], o);
  std::vector<TimeSeries> out;
  for (const auto& path : inputs) {
    const TimeSeries ts = load_csv(path, o);
    out.emplace_back(ts.timestamps(), ts.values(), std::filesystem::path(path).stem().string(), ts.time_labels());
  }
  return out;
}

ReturnKind return_kind(const std::string& v, const std::string& flag) {
  if (v == "simple") return ReturnKind::simple;
  if (v == "log") return ReturnKind::log;
  if (v == "difference") return ReturnKind::difference;
  throw UsageError("--" + flag + " must be simple, log or difference");
}

template <typename T>
T choose(const Settings& s, const std::string& key, std::initializer_list<std::pair<const char*, T>> options) {
  const std::string& v = s.str(key);
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw UsageError("--" + key + " must be one of: " + names);
}

std::vector<double> number_list(const Settings& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : s.list(key)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || used == 0) throw UsageError("--" + key + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

json run_dfa(const Settings& s, Output& out) {
  const TimeSeries ts = single_input(s);
  dfa::Options o;
  o.degree = static_cast<int>(s.integer("degree"));
  o.alignment = choose<dfa::BoxAlignment>(s, "alignment", {{"newest", dfa::BoxAlignment::newest_first},
                                                           {"oldest", dfa::BoxAlignment::oldest_first}});
  Eigen::VectorXd x = ts.values();
  if (s.str("transform") != "none") x = returns(ts, return_kind(s.str("transform"), "transform")).values;

  std::vector<std::size_t> sizes;
  for (double b : number_list(s, "boxes")) {
    if (!(b >= 1.0) || b != std::floor(b)) throw UsageError("--boxes: sizes must be positive integers");
    sizes.push_back(static_cast<std::size_t>(b));
  }
  if (sizes.empty()) {
    sizes = dfa::default_box_sizes(static_cast<std::size_t>(x.size()), o.degree);
    const auto lo = s.optional_count("box-min");
    const auto hi = s.optional_count("box-max");
    std::erase_if(sizes, [&](std::size_t n) { return (lo && n < *lo) || (hi && n > *hi); });
  }
  const auto curve = dfa::dfa_curve(x, sizes, o);
  std::optional<dfa::FitRange> range;
  if (s.has("fit-min") || s.has("fit-max"))
    range = dfa::FitRange{s.optional_count("fit-min").value_or(0),
                          s.optional_count("fit-max").value_or(static_cast<std::size_t>(x.size()))};

  json r;
  r["n_points"] = x.size();
  json pts = json::array();
  std::ostringstream csv;
  csv << "n,f\n";
  for (const auto& p : curve.points) {
    pts.push_back({{"n", p.box_size}, {"f", p.f}});
    csv << p.box_size << ',' << fmt(p.f) << '\n';
  }
  r["curve"] = pts;
  out.csv_files.emplace_back("dfa_curve.csv", csv.str());

  const auto est = dfa::hurst_exponent(curve, range);
  const auto cls = dfa::classify(est.alpha, est.stderr);
  r["alpha"] = est.alpha;
  r["stderr"] = est.stderr;
  r["r_squared"] = est.r_squared;
  r["fit_range"] = {est.n_min, est.n_max};
  r["beta"] = dfa::spectral_exponent(est.alpha);
  r["C"] = dfa::autocorr_from_alpha(est.alpha);
  r["persistence"] = dfa::to_string(cls.kind);

  if (const std::size_t w = s.count("rolling-window"); w > 0) {
    const TimeSeries signal(std::vector<std::int64_t>(ts.timestamps().end() - x.size(), ts.timestamps().end()), x,
                            ts.label());
    const auto roll = dfa::rolling_alpha(signal, w, s.count("rolling-step"), o);
    json entries = json::array();
    std::ostringstream rc;
    rc << "start,end_time,alpha,stderr\n";
    for (const auto& e : roll.entries) {
      entries.push_back(
          {{"start", e.start}, {"end_time", e.end_time}, {"alpha", e.estimate.alpha}, {"stderr", e.estimate.stderr}});
      rc << e.start << ',' << e.end_time << ',' << fmt(e.estimate.alpha) << ',' << fmt(e.estimate.stderr) << '\n';
    }
    r["rolling"] = {{"entries", entries}, {"diagnostics", roll.diagnostics}};
    out.csv_files.emplace_back("dfa_rolling.csv", rc.str());
  }
  return r;
}

lppl::FitConfig fit_config(const Settings& s) {
  lppl::FitConfig c;
  c.form = choose<lppl::Form>(s, "form", {{"power", lppl::Form::power}, {"log", lppl::Form::log}});
  c.oscillation = choose<lppl::Oscillation>(
      s, "oscillation", {{"cos", lppl::Oscillation::cosine}, {"linear", lppl::Oscillation::linear}});
  c.t_c_points = s.count("t-c-points");
  c.t_c_horizon = s.number("t-c-horizon");
  if (s.has("t-c-min") != s.has("t-c-max")) throw UsageError("--t-c-min and --t-c-max must be given together");
  if (s.has("t-c-min")) c.t_c_grid = lppl::Grid{s.number("t-c-min"), s.number("t-c-max"), c.t_c_points};
  c.omega_grid = {s.number("omega-min"), s.number("omega-max"), s.count("omega-points")};
  c.m_prime_grid = {s.number("m-min"), s.number("m-max"), s.count("m-points")};
  c.refine_points = s.count("refine");
  c.polish = s.flag("polish");
  c.min_r_squared = s.number("min-r2");
  return c;
}

json split_json(const lppl::SplitFitResult& r) {
  return {{"divergence",
           {{"form", lppl::to_string(r.divergence.form)},
            {"A", r.divergence.A},
            {"B", r.divergence.B},
            {"m_prime", r.divergence.m_prime},
            {"t_c", r.divergence.t_c},
            {"rss", r.divergence.rss},
            {"r_squared", r.divergence.r_squared}}},
          {"oscillation",
           {{"oscillation", lppl::to_string(r.oscillation.oscillation)},
            {"C", r.oscillation.C},
            {"C_stderr", r.oscillation.C_stderr},
            {"omega", r.oscillation.omega},
            {"phi", r.oscillation.phi},
            {"t_c", r.oscillation.t_c},
            {"rss", r.oscillation.rss},
            {"r_squared", r.oscillation.r_squared}}},
          {"t_c_div", r.t_c_div},
          {"t_c_osc", r.t_c_osc},
          {"gap", r.gap},
          {"low_confidence", r.low_confidence},
          {"notes", r.notes}};
}

json run_lppl(const Settings& s, Output& out) {
  const TimeSeries ts = single_input(s);
  const lppl::FitConfig cfg = fit_config(s);
  const auto obs = lppl::Observations::from(ts);
  json r;
  std::ostringstream csv;
  csv << "time,observed,fitted\n";
  const std::string mode = s.str("mode");
  if (mode == "split") {
    const auto fit = lppl::split_fit(obs, cfg);
    r["fit"] = split_json(fit);
    for (std::size_t i = 0; i < obs.size(); ++i)
      csv << ts.timestamps()[i] << ',' << fmt(obs.y[static_cast<Eigen::Index>(i)]) << ','
          << fmt(lppl::evaluate(fit, obs.t[static_cast<Eigen::Index>(i)])) << '\n';
  } else if (mode == "full") {
    const auto fit = lppl::full_fit(obs, cfg);
    const auto& p = fit.params;
    r["fit"] = {{"form", lppl::to_string(p.form)}, {"oscillation", lppl::to_string(p.oscillation)},
                {"A", p.A}, {"B", p.B}, {"C", p.C}, {"m_prime", p.m_prime}, {"omega", p.omega}, {"phi", p.phi},
                {"t_c", p.t_c}, {"rss", fit.rss}, {"r_squared", fit.r_squared}, {"t_c_cell", fit.t_c_cell},
                {"omega_cell", fit.omega_cell}};
    for (std::size_t i = 0; i < obs.size(); ++i)
      csv << ts.timestamps()[i] << ',' << fmt(obs.y[static_cast<Eigen::Index>(i)]) << ','
          << fmt(lppl::evaluate(p, obs.t[static_cast<Eigen::Index>(i)])) << '\n';
  } else {
    throw UsageError("--mode must be split or full");
  }
  out.csv_files.emplace_back("lppl_fit.csv", csv.str());

  if (s.flag("track")) {
    lppl::TrackConfig tc;
    tc.policy = choose<lppl::WindowPolicy>(
        s, "policy", {{"growing", lppl::WindowPolicy::growing}, {"rolling", lppl::WindowPolicy::rolling}});
    tc.window_length = s.count("window");
    if (tc.window_length == 0) throw UsageError("--track requires --window");
    tc.step = s.count("step");
    tc.k = s.count("k");
    tc.threshold = s.number("threshold");
    tc.rule = choose<lppl::ConvergenceRule>(
        s, "rule", {{"trend", lppl::ConvergenceRule::trend}, {"strict", lppl::ConvergenceRule::strict}});
    tc.monotone_tolerance = s.number("tolerance");
    tc.fit = cfg;
    const auto track = lppl::crash_risk_track(ts, tc);
    json entries = json::array();
    std::ostringstream tcsv;
    tcsv << "window_end,t_c_div,t_c_osc,gap,low_confidence\n";
    for (const auto& e : track.entries) {
      entries.push_back({{"window_end", e.window_end},
                         {"window_points", e.window_points},
                         {"t_c_div", e.result.t_c_div},
                         {"t_c_osc", e.result.t_c_osc},
                         {"gap", e.result.gap},
                         {"low_confidence", e.result.low_confidence}});
      tcsv << e.window_end << ',' << fmt(e.result.t_c_div) << ',' << fmt(e.result.t_c_osc) << ','
           << fmt(e.result.gap) << ',' << (e.result.low_confidence ? 1 : 0) << '\n';
    }
    r["track"] = {{"entries", entries},
                  {"convergence_flag", track.convergence_flag},
                  {"flagged_window_end", track.flagged_window_end ? json(*track.flagged_window_end) : json(nullptr)},
                  {"near_to_crash", track.near_to_crash}};
    out.csv_files.emplace_back("lppl_track.csv", tcsv.str());
  }
  return r;
}

zipf::Alphabet alphabet_from(const Settings& s, const Eigen::Ref<const Eigen::VectorXd>& rets) {
  const int size = static_cast<int>(s.integer("alphabet"));
  const auto th = number_list(s, "thresholds");
  zipf::Alphabet a = th.empty() ? zipf::Alphabet::from_quantiles(size, rets) : zipf::Alphabet{size, th};
  a.validate();
  return a;
}

json run_zipf(const Settings& s, Output& out) {
  const TimeSeries ts = single_input(s);
  const auto rets = returns(ts, return_kind(s.str("returns"), "returns"));
  const auto alphabet = alphabet_from(s, rets.values);
  const std::string letters = zipf::encode(rets, alphabet);
  const auto table = zipf::count_words(letters, s.count("word-length"), s.flag("overlap"));
  const auto ranked = zipf::rank_frequency(table);

  json r;
  r["alphabet"] = {{"size", alphabet.size}, {"thresholds", alphabet.thresholds}};
  r["table"] = {{"word_length", table.word_length()},
                {"overlapping", table.overlapping()},
                {"distinct_words", table.counts().size()},
                {"total_words", table.total()},
                {"fingerprint", table.fingerprint()}};
  std::ostringstream csv;
  csv << "rank,word,count\n";
  json top = json::array();
  for (const auto& w : ranked) {
    csv << w.rank << ',' << w.word << ',' << w.count << '\n';
    if (top.size() < 20) top.push_back({{"rank", w.rank}, {"word", w.word}, {"count", w.count}});
  }
  r["top_words"] = top;
  out.csv_files.emplace_back("zipf_rank.csv", csv.str());

  zipf::ZipfOptions zo;
  zo.exclude_hapax = !s.flag("keep-hapax");
  zo.rank_min = s.count("rank-min");
  zo.rank_max = s.optional_count("rank-max");
  std::optional<zipf::ZipfFit> zf;
  std::optional<zipf::ParetoFit> pf;
  try {
    zf = zipf::fit_zipf(ranked, zo);
    r["zeta"] = {{"value", zf->zeta}, {"stderr", zf->stderr}, {"r_squared", zf->r_squared},
                 {"rank_min", zf->rank_min}, {"rank_max", zf->rank_max}};
  } catch (const Error& e) {
    r["zeta"] = nullptr;
    out.warnings.push_back(std::string("zeta not fitted: ") + e.what());
  }
  try {
    std::vector<double> freqs;
    for (const auto& w : ranked) freqs.push_back(static_cast<double>(w.count));
    pf = zipf::fit_pareto(freqs, s.number("tail"));
    r["lambda"] = {{"value", pf->lambda}, {"stderr", pf->stderr}, {"r_squared", pf->r_squared}, {"points", pf->points}};
  } catch (const Error& e) {
    r["lambda"] = nullptr;
    out.warnings.push_back(std::string("lambda not fitted: ") + e.what());
  }
  r["relation_residual"] = zf && pf ? json(zipf::exponent_relation_residual(zf->zeta, pf->lambda)) : json(nullptr);
  return r;
}

portfolio::TimeRange time_range(const Settings& s, const std::string& key) {
  const std::string& v = s.str(key);
  const auto colon = v.find(':');
  if (colon == std::string::npos) throw UsageError("--" + key + " must be first:last");
  portfolio::TimeRange r;
  bool is_date = false;
  if (!parse_time_index(v.substr(0, colon), r.first, is_date) || !parse_time_index(v.substr(colon + 1), r.last, is_date))
    throw UsageError("--" + key + ": cannot parse '" + v + "'");
  return r;
}

json run_backtest(const Settings& s, Output& out) {
  std::vector<TimeSeries> assets = series_set(s);
  const std::string& m = s.str("market");
  std::optional<TimeSeries> market;
  if (m.empty()) {
    market = assets.front();
  } else {
    auto it = std::find_if(assets.begin(), assets.end(), [&](const TimeSeries& t) { return t.label() == m; });
    if (it != assets.end()) {
      market = *it;
      assets.erase(it);
      if (assets.empty()) assets.push_back(*market);
    } else {
      market = load_csv(m, csv_options(s));
    }
  }
  portfolio::StrategyConfig c;
  c.alphabet_size = static_cast<int>(s.integer("alphabet"));
  c.thresholds = number_list(s, "thresholds");
  c.word_length = s.count("word-length");
  c.overlapping = s.flag("overlap");
  c.weighting = choose<portfolio::Weighting>(
      s, "weighting", {{"equal", portfolio::Weighting::equal}, {"confidence", portfolio::Weighting::confidence}});
  c.margin = s.number("margin");
  c.allow_short = s.flag("allow-short");
  c.initial_capital = s.number("capital");
  c.periods_per_year = s.number("periods-per-year");
  c.refresh_lag = s.optional_count("refresh-lag");
  if (!s.has("train") || !s.has("trade")) throw UsageError("--train and --trade are required");
  const portfolio::Split split{time_range(s, "train"), time_range(s, "trade")};

  const auto res = portfolio::backtest(assets, *market, c, split);
  json r;
  const auto& p = res.report;
  r["report"] = {{"yearly_return", p.yearly_return}, {"variance", p.variance}, {"sharpe", opt(p.sharpe)},
                 {"beta", opt(p.beta)}, {"first_time", p.first_time}, {"last_time", p.last_time},
                 {"steps", p.steps}, {"trade_count", p.trade_count}};
  r["final_equity"] = res.equity.back();
  json assets_json = json::array();
  for (const auto& a : res.assets)
    assets_json.push_back({{"label", a.label}, {"table_fingerprint", a.table.fingerprint()},
                           {"thresholds", a.alphabet.thresholds}, {"buys", a.buys}, {"sells", a.sells},
                           {"holds", a.holds}});
  r["assets"] = assets_json;
  json alloc = json::object();
  for (std::size_t i = 0; i < res.final_allocation.assets.size(); ++i)
    alloc[res.final_allocation.assets[i]] = res.final_allocation.weights[i];
  r["final_allocation"] = alloc;
  std::ostringstream csv;
  csv << "time,equity\n";
  for (std::size_t i = 0; i < res.times.size(); ++i) csv << res.times[i] << ',' << fmt(res.equity[i]) << '\n';
  out.csv_files.emplace_back("backtest_equity.csv", csv.str());
  return r;
}

json matrix_json(const Eigen::MatrixXd& d) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < d.cols(); ++j) row.push_back(d(i, j));
    rows.push_back(row);
  }
  return rows;
}

json run_distance(const Settings& s, Output& out) {
  const auto set = align_common(series_set(s));
  if (set.size() < 2) throw UsageError("distance needs at least two series");
  const auto kind = choose<distance::Kind>(
      s, "kind", {{"correlation", distance::Kind::correlation}, {"entropy", distance::Kind::entropy}});
  if (!s.has("window")) throw UsageError("--window is required");
  const std::size_t window = s.count("window");
  const std::size_t step = s.optional_count("step").value_or(window);
  const std::size_t block = s.count("block");
  const auto track = distance::rolling_mean_distance(set, window, step, kind, s.list("subset"), block);

  json r;
  json pts = json::array();
  std::ostringstream tcsv;
  tcsv << "start,end_time,mean_distance\n";
  for (const auto& p : track.points) {
    pts.push_back({{"start", p.start}, {"end_time", p.end_time}, {"mean_distance", p.mean_distance}});
    tcsv << p.start << ',' << p.end_time << ',' << fmt(p.mean_distance) << '\n';
  }
  r["track"] = {{"subset", track.subset}, {"points", pts}, {"slope", track.slope}, {"slope_stderr", track.slope_stderr}};
  out.csv_files.emplace_back("distance_track.csv", tcsv.str());

  const std::size_t last_start = track.points.back().start;
  const auto dm = distance::distance_matrix(set, {last_start, window}, kind, block);
  r["matrix"] = {{"labels", dm.labels}, {"window_start", last_start}, {"window_length", window},
                 {"kind", distance::to_string(kind)}, {"d", matrix_json(dm.d)}};
  if (s.flag("mst")) {
    const auto h = distance::mst(dm);
    json edges = json::array();
    std::ostringstream ecsv;
    ecsv << "source,target,distance\n";
    for (const auto& e : h.mst_edges) {
      edges.push_back({{"source", h.labels[e.i]}, {"target", h.labels[e.j]}, {"distance", e.distance}});
      ecsv << h.labels[e.i] << ',' << h.labels[e.j] << ',' << fmt(e.distance) << '\n';
    }
    json link = json::array();
    for (const auto& m : h.linkage) link.push_back({m.a, m.b, m.height, m.size});
    r["tree"] = {{"edges", edges}, {"total_weight", h.total_weight()}, {"linkage", link},
                 {"ultrametric", matrix_json(h.ultrametric)}};
    out.csv_files.emplace_back("distance_mst.csv", ecsv.str());
  }
  return r;
}

json tail_json(const std::optional<wealth::TailFit>& t) {
  if (!t) return nullptr;
  return {{"exponent", t->exponent}, {"stderr", t->stderr}, {"r_squared", t->r_squared},
          {"tail_count", t->tail_count}, {"pareto_like", t->pareto_like}};
}

json run_wealthsim(const Settings& s, Output& out) {
  const std::size_t agents = s.count("agents");
  const double total = s.optional_number("total").value_or(static_cast<double>(agents));
  const auto seed = static_cast<std::uint64_t>(s.integer("seed"));
  wealth::Market market = wealth::init(agents, total, wealth::SavingsSpec::parse(s.str("savings")), s.number("tax"), seed);
  const double initial = market.total();
  const auto snaps = wealth::run(market, s.count("steps"), s.count("snapshots"), s.count("bins"));
  const double tail_fraction = s.number("tail");

  json r;
  json list = json::array();
  std::ostringstream csv;
  csv << "step,bin_lo,bin_hi,count\n";
  for (const auto& d : snaps) {
    list.push_back({{"step", d.step}, {"gini", d.gini}, {"total", d.total}});
    for (std::size_t b = 0; b < d.histogram.size(); ++b)
      csv << d.step << ',' << fmt(d.bin_width * static_cast<double>(b)) << ','
          << fmt(d.bin_width * static_cast<double>(b + 1)) << ',' << d.histogram[b] << '\n';
  }
  const auto& last = snaps.back();
  std::optional<wealth::TailFit> tail;
  try {
    tail = wealth::tail_exponent(last, tail_fraction);
  } catch (const Error& e) {
    out.warnings.push_back(std::string("tail exponent not fitted: ") + e.what());
  }
  const double rel = (market.total() - initial) / initial;
  r["snapshots"] = list;
  r["final"] = {{"step", last.step}, {"gini", last.gini}, {"equilibrated", last.equilibrated}, {"tail", tail_json(tail)}};
  r["conservation"] = {{"initial_total", initial}, {"final_total", market.total()}, {"relative_change", rel},
                       {"conserved", std::abs(rel) < 1e-9}};
  out.csv_files.emplace_back("wealth_histogram.csv", csv.str());
  return r;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"dfa", "lppl", "zipf", "backtest", "distance", "wealthsim"};
  return names;
}

std::vector<Param> parameters(const std::string& sub) {
  std::vector<Param> p = specific(sub);
  if (sub != "wealthsim") p.insert(p.begin(), common_input().begin(), common_input().end());
  p.insert(p.end(), common_output().begin(), common_output().end());
  return p;
}

json run_command(const std::string& sub, const Settings& s, Output& out) {
  if (sub == "dfa") return run_dfa(s, out);
  if (sub == "lppl") return run_lppl(s, out);
  if (sub == "zipf") return run_zipf(s, out);
  if (sub == "backtest") return run_backtest(s, out);
  if (sub == "distance") return run_distance(s, out);
  if (sub == "wealthsim") return run_wealthsim(s, out);
  throw UsageError("unknown subcommand '" + sub + "'");
}

}  // namespace econokit::cli
