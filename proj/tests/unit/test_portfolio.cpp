#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "econokit/error.hpp"
#include "econokit/portfolio.hpp"
#include "oracles.hpp"

using namespace econokit;
using portfolio::Action;

namespace {

TimeSeries alternating(std::size_t n, double up, double down) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  p[0] = 100.0;
  for (Eigen::Index i = 1; i < p.size(); ++i) p[i] = p[i - 1] * (i % 2 ? 1.0 + up : 1.0 - down);
  return TimeSeries::from_values(p, "alt");
}

TimeSeries walk(std::size_t n, std::uint64_t seed, const std::string& label) {
  const Eigen::VectorXd z = oracle::gaussian(n - 1, seed, 0.01);
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  p[0] = 50.0;
  for (Eigen::Index i = 1; i < p.size(); ++i) p[i] = p[i - 1] * (1.0 + z[i - 1]);
  return TimeSeries::from_values(p, label);
}

}  // namespace

TEST_CASE("sharpe ratio") {
  CHECK(portfolio::sharpe_ratio(0.1, 0.2) == doctest::Approx(0.5));
  CHECK(portfolio::sharpe_ratio(0.0, 0.3) == 0.0);
  CHECK_THROWS_AS(portfolio::sharpe_ratio(0.1, 0.0), Error);
}

TEST_CASE("beta identities") {
  const Eigen::VectorXd m = oracle::gaussian(200, 4, 0.01);
  CHECK(portfolio::beta(m, m) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(portfolio::beta(Eigen::VectorXd::Constant(200, 0.003), m) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(portfolio::beta(2.0 * m, m) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(portfolio::beta(m, Eigen::VectorXd::Zero(200)), Error);
}

TEST_CASE("performance annualises population moments") {
  const Eigen::Vector4d r(0.01, -0.02, 0.03, 0.0);
  const auto rep = portfolio::performance(r, r, 252.0);
  CHECK(rep.yearly_return == doctest::Approx(0.005 * 252.0));
  const double var = ((r.array() - 0.005).square().sum() / 4.0) * 252.0;
  CHECK(rep.variance == doctest::Approx(var));
  REQUIRE(rep.sharpe);
  CHECK(*rep.sharpe == doctest::Approx(rep.yearly_return / std::sqrt(var)));
  CHECK(*rep.beta == doctest::Approx(1.0));
}

TEST_CASE("portfolio weights") {
  CHECK_NOTHROW(portfolio::Portfolio{{"a", "cash"}, {0.25, 0.75}}.validate());
  CHECK_THROWS_AS(portfolio::Portfolio({{"a", "cash"}, {0.5, 0.4}}).validate(), Error);
  CHECK_THROWS_AS(portfolio::Portfolio({{"a", "cash"}, {-0.5, 1.5}}).validate(), Error);
  CHECK_NOTHROW(portfolio::Portfolio{{"a", "cash"}, {-0.5, 1.5}}.validate(true));
}

TEST_CASE("signal from conditional counts") {
  const zipf::WordTable t(3, true, {{"uuu", 9}, {"uud", 1}, {"udu", 4}});
  const auto s = portfolio::zipf_signal(t, "uu", 0.1);
  CHECK(s.action == Action::buy);
  CHECK(s.confidence == doctest::Approx(0.8));
  CHECK(s.p_up == doctest::Approx(0.9));

  const zipf::WordTable balanced(3, true, {{"uuu", 5}, {"uud", 5}});
  CHECK(portfolio::zipf_signal(balanced, "uu").action == Action::hold);
  const auto unseen = portfolio::zipf_signal(t, "dd");
  CHECK(unseen.action == Action::hold);
  CHECK(unseen.confidence == 0.0);
  CHECK(portfolio::zipf_signal(zipf::WordTable(3, true, {{"udd", 7}, {"udu", 2}}), "ud").action == Action::sell);
  CHECK_THROWS_AS(portfolio::zipf_signal(t, "u"), Error);
}

TEST_CASE("alternating prices are learned") {
  const auto p = alternating(61, 0.02, 0.01);
  portfolio::StrategyConfig cfg;
  cfg.word_length = 2;
  cfg.allow_short = true;
  const auto r = portfolio::backtest({p}, p, cfg, {{0, 39}, {40, 60}});
  REQUIRE(r.equity.size() == 21);
  for (std::size_t i = 1; i < r.equity.size(); ++i) CHECK(r.equity[i] > r.equity[i - 1]);
  REQUIRE(r.report.sharpe);
  CHECK(*r.report.sharpe > 0.0);

  cfg.allow_short = false;
  const auto lo = portfolio::backtest({p}, p, cfg, {{0, 39}, {40, 60}});
  for (std::size_t i = 1; i < lo.equity.size(); ++i) CHECK(lo.equity[i] >= lo.equity[i - 1]);
}

TEST_CASE("inaction leaves equity flat") {
  const auto a = walk(200, 1, "a");
  portfolio::StrategyConfig cfg;
  cfg.margin = 2.0;
  const auto r = portfolio::backtest({a}, a, cfg, {{0, 99}, {100, 199}});
  for (double e : r.equity) CHECK(e == 1.0);
  CHECK(r.report.yearly_return == 0.0);
  REQUIRE(r.report.beta);
  CHECK(*r.report.beta == 0.0);
  CHECK(r.report.trade_count == 0);
}

TEST_CASE("backtest errors") {
  const auto a = walk(200, 1, "a");
  portfolio::StrategyConfig cfg;
  CHECK_THROWS_WITH_AS(portfolio::backtest({a}, a, cfg, {{0, 120}, {100, 199}}), doctest::Contains("overlap"), Error);
  CHECK_THROWS_AS(portfolio::backtest({}, a, cfg, {{0, 99}, {100, 199}}), Error);
  CHECK_THROWS_AS(portfolio::backtest({a}, a, cfg, {{0, 99}, {300, 400}}), Error);
  CHECK_THROWS_AS(portfolio::backtest({a}, a, cfg, {{0, 1}, {100, 199}}), Error);
}

TEST_CASE("decisions never see the future") {
  auto a = walk(300, 2, "a");
  auto b = walk(300, 3, "b");
  for (std::optional<std::size_t> lag : {std::optional<std::size_t>{}, std::optional<std::size_t>{5}}) {
    portfolio::StrategyConfig cfg;
    cfg.refresh_lag = lag;
    const portfolio::Split split{{0, 149}, {150, 299}};
    const auto base = portfolio::backtest({a, b}, a, cfg, split);
    Eigen::VectorXd v = a.values();
    v.tail(50) *= 1.7;
    v.tail(30) = oracle::gaussian(30, 77).cwiseAbs() + Eigen::VectorXd::Constant(30, 10.0);
    const auto changed = portfolio::backtest({TimeSeries::from_values(v, "a"), b}, a, cfg, split);
    // Prices from position 250 on differ; every step return before that must match.
    for (std::size_t i = 0; i + 1 < 100; ++i) CHECK(changed.step_returns[i] == base.step_returns[i]);
  }
}

TEST_CASE("refresh lag tracks a regime change") {
  // Train on alternation, then trade a series that only rises.
  Eigen::VectorXd p(161);
  p[0] = 10.0;
  for (Eigen::Index i = 1; i < 81; ++i) p[i] = p[i - 1] * (i % 2 ? 1.02 : 0.99);
  for (Eigen::Index i = 81; i < 161; ++i) p[i] = p[i - 1] * 1.01;
  const auto s = TimeSeries::from_values(p, "regime");
  portfolio::StrategyConfig cfg;
  cfg.word_length = 2;
  const auto frozen = portfolio::backtest({s}, s, cfg, {{0, 80}, {81, 160}});
  cfg.refresh_lag = 1;
  const auto fresh = portfolio::backtest({s}, s, cfg, {{0, 80}, {81, 160}});
  CHECK(fresh.equity.back() > frozen.equity.back());
}

TEST_CASE("equity reconciles with step returns") {
  const auto a = walk(250, 5, "a");
  const auto b = walk(250, 6, "b");
  portfolio::StrategyConfig cfg;
  cfg.weighting = portfolio::Weighting::confidence;
  cfg.initial_capital = 1000.0;
  const auto r = portfolio::backtest({a, b}, a, cfg, {{0, 124}, {125, 249}});
  double e = 1000.0;
  for (std::size_t i = 0; i < r.step_returns.size(); ++i) {
    e *= 1.0 + r.step_returns[i];
    CHECK(r.equity[i + 1] == e);
  }
  double w = 0.0;
  for (double x : r.final_allocation.weights) w += x;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
}
