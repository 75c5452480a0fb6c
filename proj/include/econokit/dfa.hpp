#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "econokit/series.hpp"

namespace econokit::dfa {

/// Which end of the series the non-overlapping boxes are anchored to.
/// newest_first puts the most recent points in the first box and drops the
/// oldest remainder; oldest_first is the usual literature convention.
enum class BoxAlignment { newest_first, oldest_first };

struct Options {
  int degree = 1;
  BoxAlignment alignment = BoxAlignment::newest_first;
};

/// Cumulative sum of the mean-subtracted signal.
struct Profile {
  Eigen::VectorXd values;
  std::size_t source_length = 0;
};

struct FluctuationPoint {
  std::size_t box_size = 0;
  double f = 0.0;
};

struct FluctuationCurve {
  std::vector<FluctuationPoint> points;
  int degree = 1;
  BoxAlignment alignment = BoxAlignment::newest_first;

  /// True when any point has f == 0 (the detrending annihilated the profile).
  bool degenerate() const;
};

struct AlphaEstimate {
  double alpha = 0.0;
  double stderr = 0.0;
  double r_squared = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
  std::size_t points = 0;
};

struct FitRange {
  std::size_t n_min = 0;
  std::size_t n_max = 0;
};

enum class Persistence { persistent, antipersistent, uncorrelated };

struct PersistenceClass {
  Persistence kind = Persistence::uncorrelated;
  double lower = 0.0;  ///< alpha - stderr
  double upper = 0.0;  ///< alpha + stderr
};

struct RollingAlphaEntry {
  std::size_t start = 0;  ///< offset of the window in the source series
  std::int64_t end_time = 0;
  AlphaEstimate estimate;
};

struct RollingAlpha {
  std::vector<RollingAlphaEntry> entries;
  std::vector<std::string> diagnostics;
};

Profile profile(const Eigen::Ref<const Eigen::VectorXd>& x);
inline Profile profile(const TimeSeries& s) { return profile(s.values()); }

/// Root-mean detrended fluctuation for one box size.
double fluctuation(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t box_size, const Options& options = {});
inline double fluctuation(const TimeSeries& s, std::size_t box_size, const Options& options = {}) {
  return fluctuation(s.values(), box_size, options);
}

/// Geometric schedule (ratio 2^(1/4)) from 2(degree+1) up to N/4.
std::vector<std::size_t> default_box_sizes(std::size_t n, int degree = 1);

FluctuationCurve dfa_curve(const Eigen::Ref<const Eigen::VectorXd>& x, std::vector<std::size_t> box_sizes = {},
                           const Options& options = {});
inline FluctuationCurve dfa_curve(const TimeSeries& s, std::vector<std::size_t> box_sizes = {},
                                  const Options& options = {}) {
  return dfa_curve(s.values(), std::move(box_sizes), options);
}

/// Unweighted OLS slope of log f against log n.
AlphaEstimate hurst_exponent(const FluctuationCurve& curve, std::optional<FitRange> range = std::nullopt);

/// Power-spectrum exponent beta = 2 alpha - 1.
double spectral_exponent(double alpha);

/// Correlation implied by alpha, 2^(2 alpha - 1) - 1.
double autocorr_from_alpha(double alpha);

/// Uncorrelated when |alpha - 0.5| <= stderr.
PersistenceClass classify(double alpha, double stderr = 0.0);
std::string to_string(Persistence p);

RollingAlpha rolling_alpha(const TimeSeries& series, std::size_t window_length, std::size_t step,
                           const Options& options = {});

}  // namespace econokit::dfa
