#include "econokit/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "econokit/error.hpp"
#include "econokit/stats.hpp"

namespace econokit::portfolio {

void Portfolio::validate(bool allow_short) const {
  if (assets.size() != weights.size()) throw Error("portfolio: one weight per asset required");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error("portfolio: non-finite weight");
    if (!allow_short && w < 0.0) throw Error("portfolio: negative weight in a long-only portfolio");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error("portfolio: weights must sum to 1");
}

double sharpe_ratio(double expected_return, double stddev) {
  if (!(stddev > 0.0)) throw Error("sharpe ratio undefined for zero standard deviation");
  return expected_return / stddev;
}

double beta(const Eigen::Ref<const Eigen::VectorXd>& portfolio_returns,
            const Eigen::Ref<const Eigen::VectorXd>& market_returns) {
  if (portfolio_returns.size() != market_returns.size()) throw Error("beta: length mismatch");
  if (portfolio_returns.size() < 2) throw Error("beta: need at least two returns");
  const double var_m = population_variance(market_returns);
  if (!(var_m > 0.0)) throw Error("beta: market variance is zero");
  return population_covariance(portfolio_returns, market_returns) / var_m;
}

PerformanceReport performance(const Eigen::Ref<const Eigen::VectorXd>& step_returns,
                              const Eigen::Ref<const Eigen::VectorXd>& market_returns, double periods_per_year) {
  if (step_returns.size() == 0) throw Error("performance: empty return stream");
  if (!(periods_per_year > 0.0)) throw Error("performance: periods per year must be positive");
  PerformanceReport r;
  r.steps = static_cast<std::size_t>(step_returns.size());
  r.yearly_return = step_returns.mean() * periods_per_year;
  r.variance = population_variance(step_returns) * periods_per_year;
  if (r.variance > 0.0) r.sharpe = sharpe_ratio(r.yearly_return, std::sqrt(r.variance));
  if (market_returns.size() == step_returns.size() && step_returns.size() >= 2 &&
      population_variance(market_returns) > 0.0)
    r.beta = beta(step_returns, market_returns);
  return r;
}

Signal zipf_signal(const zipf::WordTable& table, const std::string& prefix, double margin) {
  if (prefix.size() + 1 != table.word_length())
    throw Error("zipf_signal: prefix must have " + std::to_string(table.word_length() - 1) + " letter(s)");
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  std::uint64_t all = 0;
  for (auto it = table.counts().lower_bound(prefix); it != table.counts().end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    all += it->second;
    if (it->first.back() == 'u') up += it->second;
    if (it->first.back() == 'd') down += it->second;
  }
  Signal s;
  if (all == 0) return s;  // unseen prefix
  s.p_up = static_cast<double>(up) / static_cast<double>(all);
  s.p_down = static_cast<double>(down) / static_cast<double>(all);
  const double diff = s.p_up - s.p_down;
  s.confidence = std::abs(diff);
  if (diff > margin) s.action = Action::buy;
  else if (-diff > margin) s.action = Action::sell;
  return s;
}

namespace {

struct Positions {
  std::size_t begin = 0;
  std::size_t end = 0;  // inclusive
};

Positions locate(const std::vector<std::int64_t>& t, const TimeRange& range, const char* what) {
  if (range.last < range.first) throw Error(std::string("backtest: empty ") + what + " window");
  const auto b = std::lower_bound(t.begin(), t.end(), range.first);
  const auto e = std::upper_bound(t.begin(), t.end(), range.last);
  if (e - b < 2) throw Error(std::string("backtest: ") + what + " window holds fewer than two prices");
  return {static_cast<std::size_t>(b - t.begin()), static_cast<std::size_t>(e - t.begin()) - 1};
}

}  // namespace

BacktestResult backtest(const std::vector<TimeSeries>& prices, const TimeSeries& market, const StrategyConfig& config,
                        const Split& split) {
  if (prices.empty()) throw Error("backtest: no assets");
  if (config.word_length == 0) throw Error("backtest: word length must be positive");
  if (!(config.initial_capital > 0.0)) throw Error("backtest: initial capital must be positive");
  if (split.train.last >= split.trade.first) throw Error("backtest: train and trade windows overlap");

  std::vector<TimeSeries> all = prices;
  all.push_back(market);
  const auto aligned = align_common(all);
  const auto& t = aligned.front().timestamps();
  const Positions train = locate(t, split.train, "train");
  const Positions trade = locate(t, split.trade, "trade");
  if (trade.end <= trade.begin) throw Error("backtest: empty signals (trade window has no steps)");

  const std::size_t k_assets = prices.size();
  const std::size_t m = config.word_length;

  BacktestResult result;
  std::vector<Eigen::VectorXd> rets;  // rets[a][i] is the return into position i+1
  std::vector<std::string> letters;   // letters[a][i] encodes rets[a][i]
  for (std::size_t a = 0; a < k_assets; ++a) {
    const ReturnSeries r = returns(aligned[a], ReturnKind::simple);
    const auto train_rets = r.values.segment(static_cast<Eigen::Index>(train.begin),
                                             static_cast<Eigen::Index>(train.end - train.begin));
    zipf::Alphabet alphabet = config.thresholds.empty()
                                  ? zipf::Alphabet::from_quantiles(config.alphabet_size, train_rets)
                                  : zipf::Alphabet{config.alphabet_size, config.thresholds};
    alphabet.validate();
    letters.push_back(zipf::encode(r.values, alphabet));
    const std::string train_letters = letters.back().substr(train.begin, train.end - train.begin);
    if (train_letters.size() < m) throw Error("backtest: train window shorter than one word");
    result.assets.push_back({aligned[a].label(), zipf::count_words(train_letters, m, config.overlapping), alphabet});
    rets.push_back(r.values);
  }
  const Eigen::VectorXd market_rets = returns(aligned.back(), ReturnKind::simple).values;

  std::vector<double> exposure(k_assets, 0.0);
  double equity = config.initial_capital;
  result.times.push_back(t[trade.begin]);
  result.equity.push_back(equity);
  std::size_t trades = 0;

  for (std::size_t pos = trade.begin; pos < trade.end; ++pos) {
    double step = 0.0;
    for (std::size_t a = 0; a < k_assets; ++a) {
      auto& trace = result.assets[a];
      // Letters of the returns into positions pos-m+2 .. pos.
      Signal sig;
      if (pos + 1 >= m) {
        const std::size_t first_letter = pos + 1 - m;  // rets index of the return into pos-m+2
        const std::string prefix = letters[a].substr(first_letter, m - 1);
        if (config.refresh_lag && pos > train.end + *config.refresh_lag) {
          const std::size_t upto = pos - *config.refresh_lag;  // last usable price position
          const std::string seen = letters[a].substr(train.begin, upto - train.begin);
          sig = zipf_signal(zipf::count_words(seen, m, config.overlapping), prefix, config.margin);
        } else {
          sig = zipf_signal(trace.table, prefix, config.margin);
        }
      }
      const double size = config.weighting == Weighting::equal ? 1.0 : sig.confidence;
      double target = exposure[a];
      switch (sig.action) {
        case Action::buy:
          target = size;
          ++trace.buys;
          break;
        case Action::sell:
          target = config.allow_short ? -size : 0.0;
          ++trace.sells;
          break;
        case Action::hold:
          ++trace.holds;
          break;
      }
      if (target != exposure[a]) ++trades;
      exposure[a] = target;
      step += exposure[a] / static_cast<double>(k_assets) * rets[a][static_cast<Eigen::Index>(pos)];
    }
    equity *= 1.0 + step;
    result.step_returns.push_back(step);
    result.market_returns.push_back(market_rets[static_cast<Eigen::Index>(pos)]);
    result.times.push_back(t[pos + 1]);
    result.equity.push_back(equity);
  }

  const Eigen::Map<const Eigen::VectorXd> sr(result.step_returns.data(),
                                             static_cast<Eigen::Index>(result.step_returns.size()));
  const Eigen::Map<const Eigen::VectorXd> mr(result.market_returns.data(),
                                             static_cast<Eigen::Index>(result.market_returns.size()));
  result.report = performance(sr, mr, config.periods_per_year);
  result.report.first_time = result.times.front();
  result.report.last_time = result.times.back();
  result.report.trade_count = trades;

  double invested = 0.0;
  for (std::size_t a = 0; a < k_assets; ++a) {
    const double w = exposure[a] / static_cast<double>(k_assets);
    result.final_allocation.assets.push_back(aligned[a].label());
    result.final_allocation.weights.push_back(w);
    invested += w;
  }
  result.final_allocation.assets.emplace_back("cash");
  result.final_allocation.weights.push_back(1.0 - invested);
  return result;
}

std::string to_string(Action a) {
  switch (a) {
    case Action::buy: return "buy";
    case Action::sell: return "sell";
    case Action::hold: return "hold";
  }
  return "hold";
}

}  // namespace econokit::portfolio
