#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace econokit::wealth {

/// Seeded stream; mt19937_64 output is fixed by the standard, and the
/// mappings below are written out so results match across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on {0, ..., n-1}, unbiased.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

enum class SavingsKind { none, fixed, uniform };

struct SavingsSpec {
  SavingsKind kind = SavingsKind::none;
  double value = 0.0;  ///< propensity for `fixed`

  /// "none", "uniform" or "fixed:<s>".
  static SavingsSpec parse(const std::string& text);
  std::string str() const;
};

struct Market {
  Eigen::VectorXd money;
  Eigen::VectorXd savings;
  double tax_rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
  Rng rng;

  std::size_t agents() const { return static_cast<std::size_t>(money.size()); }
  double total() const { return money.sum(); }
};

Market init(std::size_t n_agents, double total_money, SavingsSpec savings, double tax_rate, std::uint64_t seed);

/// Pooled random split between agents i and j with fraction eps of the
/// (taxed) pool going to i.
void pooled_exchange(Market& market, std::size_t i, std::size_t j, double eps);

using Kernel = void (*)(Market&, std::size_t, std::size_t, double);

/// Draws a distinct pair and a split fraction, then applies `kernel`.
Market& exchange_step(Market& market, Kernel kernel = pooled_exchange);

struct TailFit {
  double exponent = 0.0;
  double stderr = 0.0;
  double r_squared = 0.0;
  std::size_t tail_count = 0;
  /// r_squared met the threshold; otherwise no power-law claim is made.
  bool pareto_like = false;
};

struct WealthDistribution {
  std::uint64_t step = 0;
  std::vector<double> sorted;  ///< ascending
  std::vector<std::size_t> histogram;
  double bin_width = 0.0;
  double gini = 0.0;
  double total = 0.0;
  std::optional<TailFit> tail;
  bool equilibrated = false;
};

double gini(std::vector<double> holdings);

WealthDistribution snapshot(const Market& market, std::size_t bins = 50);

/// Runs n_steps exchanges and takes `snapshots` evenly spaced snapshots, the
/// last at n_steps. The final one is marked equilibrated when its Gini is
/// within 1e-3 of the previous snapshot's.
std::vector<WealthDistribution> run(Market& market, std::uint64_t n_steps, std::size_t snapshots = 10,
                                    std::size_t bins = 50);

/// OLS of log((rank - 1/2) / n) on log(wealth) over the richest tail_fraction of
/// agents; the half-rank shift removes most of the small-sample slope bias.
TailFit tail_exponent(const std::vector<double>& holdings, double tail_fraction = 0.1, double min_r_squared = 0.98);
inline TailFit tail_exponent(const WealthDistribution& d, double tail_fraction = 0.1, double min_r_squared = 0.98) {
  return tail_exponent(d.sorted, tail_fraction, min_r_squared);
}

}  // namespace econokit::wealth
