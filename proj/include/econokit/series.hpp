#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace econokit {

/// Timestamped real-valued observations. Time is an integer index (a plain
/// integer, or days since 1970-01-01 for ISO dates); the original text of each
/// time cell is retained as a label only.
///
/// Invariants, checked at construction: at least two points, strictly
/// increasing timestamps, finite values.
class TimeSeries {
 public:
  TimeSeries(std::vector<std::int64_t> timestamps, Eigen::VectorXd values, std::string label = {},
             std::vector<std::string> time_labels = {});

  /// Convenience constructor with timestamps 0..n-1.
  static TimeSeries from_values(const Eigen::VectorXd& values, std::string label = {});

  std::size_t size() const { return timestamps_.size(); }
  const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
  const Eigen::VectorXd& values() const { return values_; }
  const std::string& label() const { return label_; }
  /// Either empty or one label per point.
  const std::vector<std::string>& time_labels() const { return time_labels_; }
  std::string time_label(std::size_t i) const;

 private:
  std::vector<std::int64_t> timestamps_;
  Eigen::VectorXd values_;
  std::string label_;
  std::vector<std::string> time_labels_;
};

enum class ReturnKind { simple, log, difference };

/// Per-step transform of a series; element i relates points i and i+1.
struct ReturnSeries {
  Eigen::VectorXd values;
  ReturnKind kind = ReturnKind::simple;
  /// Timestamp of the later point of each step.
  std::vector<std::int64_t> timestamps;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double mean() const;
  /// Population variance.
  double variance() const;
};

ReturnSeries returns(const TimeSeries& series, ReturnKind kind = ReturnKind::simple);

/// Contiguous sub-series [start, start + length).
TimeSeries window(const TimeSeries& series, std::size_t start, std::size_t length);

/// Start offsets of rolling windows; N - length + 1 windows when step is 1.
std::vector<std::size_t> rolling_window_starts(std::size_t n, std::size_t length, std::size_t step = 1);

/// Restricts every series to the timestamps they all share.
std::vector<TimeSeries> align_common(const std::vector<TimeSeries>& series);

// ---------------------------------------------------------------------------
// CSV

enum class GapPolicy { reject, forward_fill };

struct CsvOptions {
  /// Column selectors: a header name, or a zero-based index written as digits.
  std::string time_column = "0";
  std::string value_column = "1";
  char delimiter = ',';
  GapPolicy gap_policy = GapPolicy::reject;
};

TimeSeries load_csv(const std::string& path, const CsvOptions& options = {});
TimeSeries parse_csv(const std::string& text, const CsvOptions& options = {},
                     const std::string& source_name = "<memory>");

/// Loads every non-time column of a wide file as its own series.
std::vector<TimeSeries> load_wide_csv(const std::string& path, const CsvOptions& options = {});
std::vector<TimeSeries> parse_wide_csv(const std::string& text, const CsvOptions& options = {},
                                       const std::string& source_name = "<memory>");

/// Writes "time,<label>" rows with shortest round-trip number formatting.
void write_csv(const TimeSeries& series, const std::string& path, char delimiter = ',');
std::string format_csv(const TimeSeries& series, char delimiter = ',');

/// Parses an ISO-8601 date (YYYY-MM-DD) or a plain integer into a time index.
/// Returns false when the text is neither.
bool parse_time_index(const std::string& text, std::int64_t& out, bool& is_date);
std::string format_iso_date(std::int64_t days_since_epoch);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace econokit
