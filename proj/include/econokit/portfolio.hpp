#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "econokit/series.hpp"
#include "econokit/zipf.hpp"

namespace econokit::portfolio {

/// Allocation across assets; "cash" is an ordinary entry. Weights sum to 1.
struct Portfolio {
  std::vector<std::string> assets;
  std::vector<double> weights;

  void validate(bool allow_short = false) const;
};

/// Annualised metrics of a per-step return stream.
struct PerformanceReport {
  double yearly_return = 0.0;  ///< mean step return times periods per year
  double variance = 0.0;       ///< population variance times periods per year
  std::optional<double> sharpe;
  std::optional<double> beta;
  std::int64_t first_time = 0;
  std::int64_t last_time = 0;
  std::size_t steps = 0;
  std::size_t trade_count = 0;
};

/// E(r_P) / sigma_P, no risk-free subtraction.
double sharpe_ratio(double expected_return, double stddev);

/// cov(r_P, r_M) / var(r_M) with population moments.
double beta(const Eigen::Ref<const Eigen::VectorXd>& portfolio_returns,
            const Eigen::Ref<const Eigen::VectorXd>& market_returns);

PerformanceReport performance(const Eigen::Ref<const Eigen::VectorXd>& step_returns,
                              const Eigen::Ref<const Eigen::VectorXd>& market_returns, double periods_per_year = 252.0);

enum class Action { buy, sell, hold };

struct Signal {
  Action action = Action::hold;
  double confidence = 0.0;
  double p_up = 0.0;
  double p_down = 0.0;
};

/// One-step forecast from the words in `table` that start with `prefix`.
/// The prefix must be one letter shorter than the table's words.
Signal zipf_signal(const zipf::WordTable& table, const std::string& prefix, double margin = 0.0);

enum class Weighting { equal, confidence };

struct StrategyConfig {
  int alphabet_size = 2;
  /// Empty: derived from train-window returns (see Alphabet::from_quantiles).
  std::vector<double> thresholds;
  std::size_t word_length = 3;
  bool overlapping = true;
  Weighting weighting = Weighting::equal;
  double margin = 0.0;
  /// When false a sell signal moves the asset's sleeve to cash.
  bool allow_short = false;
  double initial_capital = 1.0;
  double periods_per_year = 252.0;
  /// Rebuild the word table each step from data at least this many steps old.
  std::optional<std::size_t> refresh_lag;
};

/// Inclusive timestamp range.
struct TimeRange {
  std::int64_t first = 0;
  std::int64_t last = 0;
};

struct Split {
  TimeRange train;
  TimeRange trade;
};

struct AssetTrace {
  std::string label;
  zipf::WordTable table;
  zipf::Alphabet alphabet;
  std::size_t buys = 0;
  std::size_t sells = 0;
  std::size_t holds = 0;
};

struct BacktestResult {
  PerformanceReport report;
  std::vector<std::int64_t> times;   ///< equity timestamps (trade window)
  std::vector<double> equity;        ///< same length as times
  std::vector<double> step_returns;  ///< equity.size() - 1 entries
  std::vector<double> market_returns;
  std::vector<AssetTrace> assets;
  Portfolio final_allocation;
};

BacktestResult backtest(const std::vector<TimeSeries>& prices, const TimeSeries& market, const StrategyConfig& config,
                        const Split& split);

std::string to_string(Action a);

}  // namespace econokit::portfolio
