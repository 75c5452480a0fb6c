#include "econokit/dfa.hpp"

#include <algorithm>
#include <cmath>

#include "econokit/error.hpp"
#include "econokit/parallel.hpp"
#include "econokit/stats.hpp"

namespace econokit::dfa {
namespace {

// f values at or below this fraction of n * max|x| are rounding noise left
// after a polynomial detrend that should have been exact.
constexpr double kDegenerateTolerance = 1e-10;

std::size_t min_box(int degree) { return 2 * static_cast<std::size_t>(degree + 1); }

void check_degree(int degree) {
  if (degree < 1 || degree > 8) throw Error("dfa: detrend degree must be in [1, 8]");
}

// Orthonormal basis of degree-d polynomials sampled on n equispaced points.
Eigen::MatrixXd trend_basis(std::size_t n, int degree) {
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd v(rows, degree + 1);
  const double centre = 0.5 * static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double u = (static_cast<double>(i) - centre) / static_cast<double>(n);
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      v(i, k) = p;
      p *= u;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, degree + 1);
}

double fluctuation_from_profile(const Eigen::VectorXd& y, double scale, std::size_t n, const Options& options) {
  const auto total = static_cast<std::size_t>(y.size());
  const std::size_t boxes = total / n;
  const std::size_t offset = options.alignment == BoxAlignment::newest_first ? total - boxes * n : 0;
  const Eigen::MatrixXd q = trend_basis(n, options.degree);
  const auto len = static_cast<Eigen::Index>(n);

  double sum = 0.0;
  Eigen::VectorXd resid(len);
  for (std::size_t k = 0; k < boxes; ++k) {
    const auto seg = y.segment(static_cast<Eigen::Index>(offset + k * n), len);
    resid = seg - q * (q.transpose() * seg);
    sum += resid.squaredNorm() / static_cast<double>(n);
  }
  const double f = std::sqrt(sum / static_cast<double>(boxes));
  return f <= kDegenerateTolerance * scale * static_cast<double>(n) ? 0.0 : f;
}

}  // namespace

bool FluctuationCurve::degenerate() const {
  return std::any_of(points.begin(), points.end(), [](const FluctuationPoint& p) { return p.f == 0.0; });
}

Profile profile(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 4) throw Error("dfa: series too short (need at least 4 points)");
  Profile p;
  p.source_length = static_cast<std::size_t>(x.size());
  const double mu = x.mean();
  p.values.resize(x.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    acc += x[i] - mu;
    p.values[i] = acc;
  }
  return p;
}

double fluctuation(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t box_size, const Options& options) {
  check_degree(options.degree);
  const auto n_total = static_cast<std::size_t>(x.size());
  if (box_size < min_box(options.degree) || n_total < 2 * box_size)
    throw Error("dfa: box size " + std::to_string(box_size) + " out of admissible range for N = " +
                std::to_string(n_total));
  const Profile p = profile(x);
  return fluctuation_from_profile(p.values, x.cwiseAbs().maxCoeff(), box_size, options);
}

std::vector<std::size_t> default_box_sizes(std::size_t n, int degree) {
  check_degree(degree);
  const std::size_t lo = min_box(degree);
  const std::size_t hi = n / 4;
  std::vector<std::size_t> sizes;
  for (int k = 0;; ++k) {
    const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(lo) * std::exp2(k / 4.0)));
    if (s > hi) break;
    if (sizes.empty() || s > sizes.back()) sizes.push_back(s);
  }
  return sizes;
}

FluctuationCurve dfa_curve(const Eigen::Ref<const Eigen::VectorXd>& x, std::vector<std::size_t> box_sizes,
                           const Options& options) {
  check_degree(options.degree);
  const auto n_total = static_cast<std::size_t>(x.size());
  if (box_sizes.empty()) {
    box_sizes = default_box_sizes(n_total, options.degree);
  } else {
    std::sort(box_sizes.begin(), box_sizes.end());
    box_sizes.erase(std::unique(box_sizes.begin(), box_sizes.end()), box_sizes.end());
  }
  if (box_sizes.empty()) throw Error("dfa: no admissible box size for N = " + std::to_string(n_total));
  for (std::size_t n : box_sizes)
    if (n < min_box(options.degree) || n > n_total / 4)
      throw Error("dfa: box size " + std::to_string(n) + " outside [" + std::to_string(min_box(options.degree)) +
                  ", " + std::to_string(n_total / 4) + "]");

  const Profile p = profile(x);
  const double scale = x.cwiseAbs().maxCoeff();
  FluctuationCurve curve;
  curve.degree = options.degree;
  curve.alignment = options.alignment;
  curve.points.resize(box_sizes.size());
  parallel_for(box_sizes.size(), [&](std::size_t i) {
    curve.points[i] = {box_sizes[i], fluctuation_from_profile(p.values, scale, box_sizes[i], options)};
  });
  return curve;
}

AlphaEstimate hurst_exponent(const FluctuationCurve& curve, std::optional<FitRange> range) {
  std::vector<const FluctuationPoint*> used;
  for (const auto& pt : curve.points)
    if (!range || (pt.box_size >= range->n_min && pt.box_size <= range->n_max)) used.push_back(&pt);
  if (used.size() < 4) throw Error("dfa: need at least 4 curve points in the fit range");
  for (const auto* pt : used)
    if (!(pt->f > 0.0)) throw Error("dfa: degenerate signal (zero fluctuation at n = " + std::to_string(pt->box_size) + ")");

  Eigen::VectorXd lx(static_cast<Eigen::Index>(used.size()));
  Eigen::VectorXd ly(lx.size());
  for (std::size_t i = 0; i < used.size(); ++i) {
    lx[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(used[i]->box_size));
    ly[static_cast<Eigen::Index>(i)] = std::log(used[i]->f);
  }
  const auto fit = fit_line(lx, ly);
  AlphaEstimate est;
  est.alpha = fit.slope;
  est.stderr = fit.slope_stderr;
  est.r_squared = fit.r_squared;
  est.n_min = used.front()->box_size;
  est.n_max = used.back()->box_size;
  est.points = used.size();
  return est;
}

double spectral_exponent(double alpha) { return 2.0 * alpha - 1.0; }

double autocorr_from_alpha(double alpha) { return std::exp2(2.0 * alpha - 1.0) - 1.0; }

PersistenceClass classify(double alpha, double stderr) {
  if (!std::isfinite(alpha)) throw Error("classify: alpha must be finite");
  const double band = std::abs(stderr);
  PersistenceClass c;
  c.lower = alpha - band;
  c.upper = alpha + band;
  if (c.lower <= 0.5 && 0.5 <= c.upper) c.kind = Persistence::uncorrelated;
  else c.kind = alpha > 0.5 ? Persistence::persistent : Persistence::antipersistent;
  return c;
}

std::string to_string(Persistence p) {
  switch (p) {
    case Persistence::persistent: return "persistent";
    case Persistence::antipersistent: return "antipersistent";
    case Persistence::uncorrelated: return "uncorrelated";
  }
  return "unknown";
}

RollingAlpha rolling_alpha(const TimeSeries& series, std::size_t window_length, std::size_t step,
                           const Options& options) {
  if (default_box_sizes(window_length, options.degree).size() < 4)
    throw Error("dfa: rolling window of " + std::to_string(window_length) + " points admits fewer than 4 box sizes");
  RollingAlpha track;
  for (std::size_t start : rolling_window_starts(series.size(), window_length, step)) {
    const auto seg = series.values().segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(window_length));
    const std::int64_t end_time = series.timestamps()[start + window_length - 1];
    const FluctuationCurve curve = dfa_curve(seg, {}, options);
    if (curve.degenerate()) {
      track.diagnostics.push_back("window ending at " + std::to_string(end_time) + ": degenerate signal");
      continue;
    }
    track.entries.push_back({start, end_time, hurst_exponent(curve)});
  }
  return track;
}

}  // namespace econokit::dfa
