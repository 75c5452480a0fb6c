#include "econokit/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "econokit/error.hpp"

namespace econokit {

TimeSeries::TimeSeries(std::vector<std::int64_t> timestamps, Eigen::VectorXd values, std::string label,
                       std::vector<std::string> time_labels)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      label_(std::move(label)),
      time_labels_(std::move(time_labels)) {
  if (timestamps_.size() != static_cast<std::size_t>(values_.size()))
    throw Error("time series: timestamp and value counts differ");
  if (timestamps_.size() < 2) throw Error("time series: need at least two points");
  if (!time_labels_.empty() && time_labels_.size() != timestamps_.size())
    throw Error("time series: label count differs from point count");
  for (std::size_t i = 1; i < timestamps_.size(); ++i)
    if (timestamps_[i] <= timestamps_[i - 1]) throw Error("time series: non-monotone timestamps");
  if (!values_.allFinite()) throw Error("time series: non-finite value");
}

TimeSeries TimeSeries::from_values(const Eigen::VectorXd& values, std::string label) {
  std::vector<std::int64_t> t(static_cast<std::size_t>(values.size()));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<std::int64_t>(i);
  return TimeSeries(std::move(t), values, std::move(label));
}

std::string TimeSeries::time_label(std::size_t i) const {
  if (!time_labels_.empty()) return time_labels_.at(i);
  return std::to_string(timestamps_.at(i));
}

double ReturnSeries::mean() const {
  if (values.size() == 0) throw Error("return series is empty");
  return values.mean();
}

double ReturnSeries::variance() const {
  const double mu = mean();
  return (values.array() - mu).square().mean();
}

ReturnSeries returns(const TimeSeries& series, ReturnKind kind) {
  const auto& x = series.values();
  const Eigen::Index n = x.size();
  ReturnSeries r;
  r.kind = kind;
  r.values.resize(n - 1);
  r.timestamps.assign(series.timestamps().begin() + 1, series.timestamps().end());
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double a = x[i];
    const double b = x[i + 1];
    switch (kind) {
      case ReturnKind::simple:
        if (a == 0.0) throw Error("simple returns undefined after a zero value");
        r.values[i] = b / a - 1.0;
        break;
      case ReturnKind::log:
        if (!(a > 0.0) || !(b > 0.0)) throw Error("log returns require strictly positive values");
        r.values[i] = std::log(b / a);
        break;
      case ReturnKind::difference:
        r.values[i] = b - a;
        break;
    }
  }
  return r;
}

TimeSeries window(const TimeSeries& series, std::size_t start, std::size_t length) {
  if (start + length > series.size() || length < 2)
    throw Error("window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                ") out of range for series of length " + std::to_string(series.size()));
  std::vector<std::int64_t> t(series.timestamps().begin() + static_cast<std::ptrdiff_t>(start),
                              series.timestamps().begin() + static_cast<std::ptrdiff_t>(start + length));
  std::vector<std::string> labels;
  if (!series.time_labels().empty())
    labels.assign(series.time_labels().begin() + static_cast<std::ptrdiff_t>(start),
                  series.time_labels().begin() + static_cast<std::ptrdiff_t>(start + length));
  Eigen::VectorXd v = series.values().segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(length));
  std::string label = series.label() + "[" + std::to_string(start) + ":" + std::to_string(start + length) + ")";
  return TimeSeries(std::move(t), std::move(v), std::move(label), std::move(labels));
}

std::vector<std::size_t> rolling_window_starts(std::size_t n, std::size_t length, std::size_t step) {
  if (step == 0) throw Error("rolling window step must be positive");
  if (length == 0 || length > n) throw Error("rolling window longer than series");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + length <= n; s += step) starts.push_back(s);
  return starts;
}

std::vector<TimeSeries> align_common(const std::vector<TimeSeries>& series) {
  if (series.empty()) return {};
  std::vector<std::int64_t> common = series.front().timestamps();
  for (std::size_t k = 1; k < series.size(); ++k) {
    std::vector<std::int64_t> next;
    std::set_intersection(common.begin(), common.end(), series[k].timestamps().begin(),
                          series[k].timestamps().end(), std::back_inserter(next));
    common = std::move(next);
  }
  if (common.size() < 2) throw Error("series share fewer than two timestamps");
  std::vector<TimeSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(common.size()));
    std::vector<std::string> labels;
    std::size_t j = 0;
    for (std::size_t i = 0; i < s.size() && j < common.size(); ++i) {
      if (s.timestamps()[i] != common[j]) continue;
      v[static_cast<Eigen::Index>(j)] = s.values()[static_cast<Eigen::Index>(i)];
      if (!s.time_labels().empty()) labels.push_back(s.time_labels()[i]);
      ++j;
    }
    out.emplace_back(common, std::move(v), s.label(), std::move(labels));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(delim, pos);
    out.push_back(trim(std::string_view(line).substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& selector) {
  auto it = std::find(header.begin(), header.end(), selector);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  std::size_t idx = 0;
  auto [p, ec] = std::from_chars(selector.data(), selector.data() + selector.size(), idx);
  if (ec == std::errc() && p == selector.data() + selector.size() && idx < header.size()) return idx;
  throw Error("csv: no column '" + selector + "'");
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* b = text.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, text.data() + text.size(), out);
  return ec == std::errc() && p == text.data() + text.size();
}

struct Row {
  std::size_t line;
  std::int64_t t;
  std::string time_text;
  std::vector<std::string> cells;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
  bool dates = false;
};

Table read_table(const std::string& text, const CsvOptions& options, const std::string& source,
                 std::size_t& time_col) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line, options.delimiter);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      time_col = resolve_column(table.header, options.time_column);
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error(source + ": malformed row " + std::to_string(line_no) + " (expected " +
                  std::to_string(table.header.size()) + " fields, got " + std::to_string(cells.size()) + ")");
    Row row{line_no, 0, cells[time_col], std::move(cells)};
    bool is_date = false;
    if (!parse_time_index(row.time_text, row.t, is_date))
      throw Error(source + ": malformed time '" + row.time_text + "' at row " + std::to_string(line_no));
    if (table.rows.empty()) table.dates = is_date;
    else if (table.dates != is_date)
      throw Error(source + ": mixed date and integer times at row " + std::to_string(line_no));
    if (!table.rows.empty() && row.t <= table.rows.back().t)
      throw Error(source + ": non-monotone timestamps at row " + std::to_string(line_no));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(source + ": empty file (header row required)");
  if (table.rows.empty()) throw Error(source + ": empty series");
  return table;
}

TimeSeries build_series(const Table& table, std::size_t value_col, const CsvOptions& options,
                        const std::string& source) {
  std::vector<std::int64_t> t;
  std::vector<double> v;
  std::vector<std::string> labels;
  const bool fill = options.gap_policy == GapPolicy::forward_fill;
  for (const auto& row : table.rows) {
    double x = 0.0;
    const bool ok = parse_number(row.cells[value_col], x) && std::isfinite(x);
    if (!ok) {
      const std::string& cell = row.cells[value_col];
      double probe = 0.0;
      const bool missing = cell.empty() || (parse_number(cell, probe) && !std::isfinite(probe)) ||
                           cell == "NA" || cell == "nan" || cell == "NaN";
      if (!missing)
        throw Error(source + ": malformed value '" + cell + "' at row " + std::to_string(row.line));
      if (!fill || v.empty())
        throw Error(source + ": missing or non-finite value at row " + std::to_string(row.line));
      x = v.back();
    }
    if (fill && !t.empty()) {
      for (std::int64_t gap = t.back() + 1; gap < row.t; ++gap) {
        t.push_back(gap);
        v.push_back(v.back());
        labels.push_back(table.dates ? format_iso_date(gap) : std::to_string(gap));
      }
    }
    t.push_back(row.t);
    v.push_back(x);
    labels.push_back(row.time_text);
  }
  if (t.size() < 2) throw Error(source + ": series needs at least two rows");
  Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return TimeSeries(std::move(t), std::move(values), table.header[value_col], std::move(labels));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool parse_time_index(const std::string& text, std::int64_t& out, bool& is_date) {
  if (text.empty()) return false;
  // YYYY-MM-DD
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto ok = [](auto r, const char* end) { return r.ec == std::errc() && r.ptr == end; };
    const char* s = text.data();
    if (!ok(std::from_chars(s, s + 4, y), s + 4) || !ok(std::from_chars(s + 5, s + 7, m), s + 7) ||
        !ok(std::from_chars(s + 8, s + 10, d), s + 10))
      return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd}.time_since_epoch().count();
    is_date = true;
    return true;
  }
  const char* b = text.data();
  const char* e = text.data() + text.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  is_date = false;
  return ec == std::errc() && p == e;
}

std::string format_iso_date(std::int64_t days_since_epoch) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_double(double value) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

TimeSeries parse_csv(const std::string& text, const CsvOptions& options, const std::string& source_name) {
  std::size_t time_col = 0;
  Table table = read_table(text, options, source_name, time_col);
  const std::size_t value_col = resolve_column(table.header, options.value_column);
  if (value_col == time_col) throw Error(source_name + ": value column equals time column");
  return build_series(table, value_col, options, source_name);
}

TimeSeries load_csv(const std::string& path, const CsvOptions& options) {
  return parse_csv(slurp(path), options, path);
}

std::vector<TimeSeries> parse_wide_csv(const std::string& text, const CsvOptions& options,
                                       const std::string& source_name) {
  std::size_t time_col = 0;
  Table table = read_table(text, options, source_name, time_col);
  std::vector<TimeSeries> out;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != time_col) out.push_back(build_series(table, c, options, source_name));
  if (out.empty()) throw Error(source_name + ": no value columns");
  return out;
}

std::vector<TimeSeries> load_wide_csv(const std::string& path, const CsvOptions& options) {
  return parse_wide_csv(slurp(path), options, path);
}

std::string format_csv(const TimeSeries& series, char delimiter) {
  std::string out = "time";
  out += delimiter;
  out += series.label().empty() ? "value" : series.label();
  out += '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += series.time_label(i);
    out += delimiter;
    out += format_double(series.values()[static_cast<Eigen::Index>(i)]);
    out += '\n';
  }
  return out;
}

void write_csv(const TimeSeries& series, const std::string& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << format_csv(series, delimiter);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace econokit
