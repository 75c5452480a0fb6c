#include "econokit/wealth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "econokit/error.hpp"
#include "econokit/series.hpp"
#include "econokit/stats.hpp"

namespace econokit::wealth {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do x = engine_();
  while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

SavingsSpec SavingsSpec::parse(const std::string& text) {
  if (text == "none") return {};
  if (text == "uniform") return {SavingsKind::uniform, 0.0};
  if (text.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    double s = 0.0;
    try {
      s = std::stod(text.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 6) throw Error("savings: cannot parse '" + text + "'");
    if (!(s >= 0.0 && s <= 1.0)) throw Error("savings: propensity must be in [0, 1]");
    return {SavingsKind::fixed, s};
  }
  throw Error("savings must be none, uniform or fixed:<s>");
}

std::string SavingsSpec::str() const {
  switch (kind) {
    case SavingsKind::none: return "none";
    case SavingsKind::uniform: return "uniform";
    case SavingsKind::fixed: return "fixed:" + format_double(value);
  }
  return "none";
}

Market init(std::size_t n_agents, double total_money, SavingsSpec savings, double tax_rate, std::uint64_t seed) {
  if (n_agents < 2) throw Error("wealth: need at least two agents");
  if (!(total_money > 0.0) || !std::isfinite(total_money)) throw Error("wealth: total money must be positive");
  if (!(tax_rate >= 0.0 && tax_rate < 1.0)) throw Error("wealth: tax rate must be in [0, 1)");
  if (savings.kind == SavingsKind::fixed && !(savings.value >= 0.0 && savings.value < 1.0))
    throw Error("wealth: fixed savings propensity must be in [0, 1)");

  Market m;
  const auto n = static_cast<Eigen::Index>(n_agents);
  m.money = Eigen::VectorXd::Constant(n, total_money / static_cast<double>(n_agents));
  m.savings = Eigen::VectorXd::Zero(n);
  m.tax_rate = tax_rate;
  m.seed = seed;
  m.rng = Rng(seed);
  if (savings.kind == SavingsKind::fixed) m.savings.setConstant(savings.value);
  if (savings.kind == SavingsKind::uniform)
    for (Eigen::Index i = 0; i < n; ++i) m.savings[i] = m.rng.uniform();
  return m;
}

void pooled_exchange(Market& m, std::size_t i, std::size_t j, double eps) {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  const double kept_a = m.savings[a] * m.money[a];
  const double kept_b = m.savings[b] * m.money[b];
  double pool = (m.money[a] - kept_a) + (m.money[b] - kept_b);
  pool -= m.tax_rate * pool;
  const double to_a = eps * pool;
  m.money[a] = kept_a + to_a;
  m.money[b] = kept_b + (pool - to_a);
}

Market& exchange_step(Market& m, Kernel kernel) {
  const std::size_t n = m.agents();
  if (n < 2) throw Error("wealth: need at least two agents");
  const std::size_t i = m.rng.index(n);
  std::size_t j = m.rng.index(n - 1);
  if (j >= i) ++j;
  const double eps = m.rng.uniform();
  kernel(m, i, j, eps);
  ++m.step_count;
  return m;
}

double gini(std::vector<double> x) {
  if (x.empty()) throw Error("gini: empty input");
  std::sort(x.begin(), x.end());
  double total = 0.0;
  double weighted = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    total += x[k];
    weighted += (2.0 * static_cast<double>(k + 1) - n - 1.0) * x[k];
  }
  return total > 0.0 ? weighted / (n * total) : 0.0;
}

WealthDistribution snapshot(const Market& m, std::size_t bins) {
  if (bins == 0) throw Error("wealth: histogram needs at least one bin");
  WealthDistribution d;
  d.step = m.step_count;
  d.sorted.assign(m.money.data(), m.money.data() + m.money.size());
  std::sort(d.sorted.begin(), d.sorted.end());
  d.total = m.total();
  d.gini = gini(d.sorted);
  d.histogram.assign(bins, 0);
  const double top = d.sorted.back();
  d.bin_width = top > 0.0 ? top / static_cast<double>(bins) : 1.0;
  for (double w : d.sorted) {
    const auto k = std::min(static_cast<std::size_t>(w / d.bin_width), bins - 1);
    ++d.histogram[k];
  }
  try {
    d.tail = tail_exponent(d.sorted);
  } catch (const Error&) {
    d.tail.reset();
  }
  return d;
}

std::vector<WealthDistribution> run(Market& m, std::uint64_t n_steps, std::size_t snapshots, std::size_t bins) {
  if (n_steps == 0) throw Error("wealth: n_steps must be at least 1");
  if (snapshots == 0) snapshots = 1;
  std::vector<WealthDistribution> out;
  std::uint64_t done = 0;
  for (std::size_t k = 1; k <= snapshots; ++k) {
    const std::uint64_t target = n_steps / snapshots * k + (k == snapshots ? n_steps % snapshots : 0);
    for (; done < target; ++done) exchange_step(m);
    out.push_back(snapshot(m, bins));
  }
  if (out.size() >= 2) out.back().equilibrated = std::abs(out.back().gini - out[out.size() - 2].gini) < 1e-3;
  return out;
}

TailFit tail_exponent(const std::vector<double>& holdings, double tail_fraction, double min_r_squared) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw Error("tail exponent: tail fraction must be in (0, 1]");
  std::vector<double> desc = holdings;
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const auto take = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(desc.size())));
  if (take < 50) throw Error("tail exponent: tail too small (need at least 50 agents, have " + std::to_string(take) + ")");
  const auto n = static_cast<double>(desc.size());
  Eigen::VectorXd lx(static_cast<Eigen::Index>(take));
  Eigen::VectorXd ly(lx.size());
  for (std::size_t k = 0; k < take; ++k) {
    if (!(desc[k] > 0.0)) throw Error("tail exponent: non-positive holding in the tail");
    lx[static_cast<Eigen::Index>(k)] = std::log(desc[k]);
    ly[static_cast<Eigen::Index>(k)] = std::log((static_cast<double>(k) + 0.5) / n);
  }
  const auto fit = fit_line(lx, ly);
  TailFit t;
  t.exponent = -fit.slope;
  t.stderr = fit.slope_stderr;
  t.r_squared = fit.r_squared;
  t.tail_count = take;
  t.pareto_like = fit.r_squared >= min_r_squared;
  return t;
}

}  // namespace econokit::wealth
