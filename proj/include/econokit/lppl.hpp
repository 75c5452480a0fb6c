#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "econokit/error.hpp"
#include "econokit/series.hpp"

namespace econokit::lppl {

/// power: A + B tau^-m' [1 + C osc]; log: A + B ln(tau) [1 + C osc].
enum class Form { power, log };

/// linear: osc = omega ln(tau) + phi, the bracket exactly as usually printed.
/// cosine: osc = cos(omega ln(tau) + phi), bounded and identifiable.
enum class Oscillation { cosine, linear };

/// Seven-parameter log-periodic law. tau = (t_c - t) / t_c.
template <typename Scalar>
struct BasicParams {
  Scalar A{};
  Scalar B{};
  Scalar C{};
  Scalar m_prime{};  ///< ignored by the log form
  Scalar omega{};
  Scalar phi{};
  Scalar t_c{};
  Form form = Form::power;
  Oscillation oscillation = Oscillation::linear;
};

using Params = BasicParams<double>;

template <typename Scalar>
Scalar reduced_time(Scalar t_c, Scalar t) {
  if (!(t < t_c)) throw Error("lppl: evaluation requires t < t_c");
  if (!(t_c > Scalar(0))) throw Error("lppl: t_c must be positive");
  return (t_c - t) / t_c;
}

template <typename Scalar>
Scalar oscillation_term(const BasicParams<Scalar>& p, Scalar log_tau) {
  using std::cos;
  const Scalar arg = p.omega * log_tau + p.phi;
  return p.oscillation == Oscillation::cosine ? cos(arg) : arg;
}

/// Power-law divergence with log-periodic correction.
template <typename Scalar>
Scalar lppl_eval(const BasicParams<Scalar>& p, Scalar t) {
  using std::log;
  using std::pow;
  if (p.form != Form::power) throw Error("lppl_eval: parameters are not in power form");
  const Scalar tau = reduced_time(p.t_c, t);
  const Scalar lt = log(tau);
  return p.A + p.B * pow(tau, -p.m_prime) * (Scalar(1) + p.C * oscillation_term(p, lt));
}

/// Logarithmic divergence (the m' -> 0 simplification).
template <typename Scalar>
Scalar log_lppl_eval(const BasicParams<Scalar>& p, Scalar t) {
  using std::log;
  if (p.form != Form::log) throw Error("log_lppl_eval: parameters are not in log form");
  const Scalar lt = log(reduced_time(p.t_c, t));
  return p.A + p.B * lt * (Scalar(1) + p.C * oscillation_term(p, lt));
}

template <typename Scalar>
Scalar evaluate(const BasicParams<Scalar>& p, Scalar t) {
  return p.form == Form::power ? lppl_eval(p, t) : log_lppl_eval(p, t);
}

// ---------------------------------------------------------------------------
// Fitting

/// Uniform candidate grid [lo, hi] with `points` nodes.
struct Grid {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1;

  double step() const { return points > 1 ? (hi - lo) / static_cast<double>(points - 1) : 0.0; }
  double at(std::size_t i) const { return points > 1 ? lo + step() * static_cast<double>(i) : lo; }
};

struct FitConfig {
  Form form = Form::log;
  Oscillation oscillation = Oscillation::cosine;
  /// Defaults to (window end + 1) .. (window end + t_c_horizon * window length).
  std::optional<Grid> t_c_grid;
  std::size_t t_c_points = 200;
  double t_c_horizon = 0.5;
  Grid omega_grid{4.0, 25.0, 100};
  Grid m_prime_grid{0.05, 0.95, 50};
  /// Nodes per dimension of the single refinement pass; 0 disables it.
  std::size_t refine_points = 21;
  /// Bounded Brent line searches inside the refined cell.
  bool polish = true;
  /// Oscillation stage also fits a level offset and a divergence rescaling, so
  /// misfit left by the divergence stage is not read as oscillation.
  bool oscillation_offsets = true;
  /// Split fits whose divergence stage explains less than this are low-confidence.
  double min_r_squared = 0.5;
};

struct DivergenceFit {
  Form form = Form::log;
  double A = 0.0;
  double B = 0.0;
  double m_prime = 0.0;
  double t_c = 0.0;
  double rss = 0.0;
  double r_squared = 0.0;
  double t_c_step = 0.0;  ///< coarse grid resolution
  bool t_c_at_edge = false;
};

struct OscillationFit {
  Oscillation oscillation = Oscillation::cosine;
  double C = 0.0;
  double C_stderr = 0.0;
  double omega = 0.0;
  double phi = 0.0;
  double t_c = 0.0;
  double rss = 0.0;
  /// Share of the divergence residual explained by the oscillation.
  double r_squared = 0.0;
  double t_c_step = 0.0;
  bool t_c_at_edge = false;
};

struct SplitFitResult {
  DivergenceFit divergence;
  OscillationFit oscillation;
  double t_c_div = 0.0;
  double t_c_osc = 0.0;
  double gap = 0.0;  ///< t_c_div - t_c_osc
  bool low_confidence = false;
  std::vector<std::string> notes;
};

struct FullFitResult {
  Params params;
  double rss = 0.0;
  double r_squared = 0.0;
  double t_c_step = 0.0;
  double omega_step = 0.0;
  /// Size of one refinement cell in t_c and omega (coarse step when refinement is off).
  double t_c_cell = 0.0;
  double omega_cell = 0.0;
};

/// Observations as (t, y) with t the integer time index of each point.
struct Observations {
  Eigen::VectorXd t;
  Eigen::VectorXd y;

  static Observations from(const TimeSeries& s);
  std::size_t size() const { return static_cast<std::size_t>(t.size()); }
};

/// The default critical-time grid for a window.
Grid default_t_c_grid(const Observations& obs, const FitConfig& config);

DivergenceFit fit_divergence(const Observations& obs, const FitConfig& config = {});
OscillationFit fit_oscillation(const Observations& obs, const DivergenceFit& divergence, const FitConfig& config = {});
SplitFitResult split_fit(const Observations& obs, const FitConfig& config = {});
FullFitResult full_fit(const Observations& obs, const FitConfig& config = {});

/// Model implied by a split fit: A + B g(t_c_div) [1 + C osc(t_c_osc)].
double evaluate(const SplitFitResult& fit, double t);

inline DivergenceFit fit_divergence(const TimeSeries& s, const FitConfig& c = {}) {
  return fit_divergence(Observations::from(s), c);
}
inline SplitFitResult split_fit(const TimeSeries& s, const FitConfig& c = {}) { return split_fit(Observations::from(s), c); }
inline FullFitResult full_fit(const TimeSeries& s, const FitConfig& c = {}) { return full_fit(Observations::from(s), c); }

// ---------------------------------------------------------------------------
// Crash-risk tracking

enum class WindowPolicy { growing, rolling };

/// How the trailing gaps must shrink before convergence is flagged.
/// `trend`: least-squares slope of |gap| over the last k windows is negative.
/// `strict`: each |gap| is at most the previous one plus `monotone_tolerance`.
enum class ConvergenceRule { trend, strict };

struct TrackConfig {
  WindowPolicy policy = WindowPolicy::growing;
  /// Points in the first window (growing) or in every window (rolling).
  std::size_t window_length = 0;
  std::size_t step = 5;
  /// Number of trailing windows whose gaps must shrink.
  std::size_t k = 5;
  /// Convergence threshold on |gap|, in index units.
  double threshold = 5.0;
  ConvergenceRule rule = ConvergenceRule::trend;
  /// Slack for the strict rule and for near-to-crash detection.
  double monotone_tolerance = 1.0;
  FitConfig fit;
};

struct TrackEntry {
  std::int64_t window_end = 0;
  std::size_t window_points = 0;
  SplitFitResult result;
};

struct GapAssessment {
  bool converged = false;
  /// Index of the entry at which convergence was first detected.
  std::optional<std::size_t> flagged_at;
  /// Entries at which |gap| shrank and then re-widened.
  std::vector<std::size_t> near_to_crash;
};

struct CrashRiskTrack {
  std::vector<TrackEntry> entries;
  bool convergence_flag = false;
  std::optional<std::int64_t> flagged_window_end;
  std::vector<std::int64_t> near_to_crash;
};

/// Applies the convergence and near-to-crash rules to a gap sequence.
/// `confident` may be empty (all entries trusted).
GapAssessment assess_gaps(const std::vector<double>& gaps, const std::vector<bool>& confident, const TrackConfig& config);

CrashRiskTrack crash_risk_track(const TimeSeries& series, const TrackConfig& config);

std::string to_string(Form f);
std::string to_string(Oscillation o);

}  // namespace econokit::lppl
