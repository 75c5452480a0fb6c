#include "econokit/lppl.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "econokit/parallel.hpp"

namespace econokit::lppl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxDims = 3;

using Point = std::array<double, kMaxDims>;
using BatchFn = std::function<std::vector<double>(const std::vector<Grid>&)>;
using PointFn = std::function<double(const Point&)>;

struct SearchOutcome {
  Point best{};
  double rss = kInf;
  std::array<std::size_t, kMaxDims> coarse_index{};
  std::vector<Grid> coarse;
  std::vector<double> cell;  // refinement cell width per dimension
};

std::size_t flat_size(const std::vector<Grid>& dims) {
  std::size_t n = 1;
  for (const auto& g : dims) n *= g.points;
  return n;
}

std::array<std::size_t, kMaxDims> unflatten(std::size_t flat, const std::vector<Grid>& dims) {
  std::array<std::size_t, kMaxDims> idx{};
  for (std::size_t d = dims.size(); d-- > 0;) {
    idx[d] = flat % dims[d].points;
    flat /= dims[d].points;
  }
  return idx;
}

// First strict minimum in lexicographic order, so ties resolve to the
// smallest t_c, then the smallest omega.
std::optional<std::size_t> argmin(const std::vector<double>& rss) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rss.size(); ++i) {
    if (!std::isfinite(rss[i])) continue;
    if (!best || rss[i] < rss[*best]) best = i;
  }
  return best;
}

Grid refine_around(const Grid& g, std::size_t k, std::size_t points) {
  if (g.points <= 1) return g;
  const double lo = g.at(k > 0 ? k - 1 : k);
  const double hi = g.at(k + 1 < g.points ? k + 1 : k);
  return {lo, hi, std::max<std::size_t>(points, 2)};
}

SearchOutcome grid_search(const std::vector<Grid>& dims, const BatchFn& batch, const PointFn& point,
                          const FitConfig& config) {
  SearchOutcome out;
  out.coarse = dims;
  const auto coarse_rss = batch(dims);
  const auto k = argmin(coarse_rss);
  if (!k) throw Error("lppl: no admissible grid point");
  out.coarse_index = unflatten(*k, dims);
  out.rss = coarse_rss[*k];
  for (std::size_t d = 0; d < dims.size(); ++d) out.best[d] = dims[d].at(out.coarse_index[d]);

  std::vector<Grid> bounds(dims.size());
  out.cell.resize(dims.size());
  if (config.refine_points > 0) {
    std::vector<Grid> fine(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) fine[d] = refine_around(dims[d], out.coarse_index[d], config.refine_points);
    const auto fine_rss = batch(fine);
    if (const auto kf = argmin(fine_rss); kf && fine_rss[*kf] <= out.rss) {
      const auto idx = unflatten(*kf, fine);
      out.rss = fine_rss[*kf];
      for (std::size_t d = 0; d < dims.size(); ++d) out.best[d] = fine[d].at(idx[d]);
      for (std::size_t d = 0; d < dims.size(); ++d) bounds[d] = refine_around(fine[d], idx[d], 2);
    } else {
      for (std::size_t d = 0; d < dims.size(); ++d) bounds[d] = refine_around(dims[d], out.coarse_index[d], 2);
    }
    for (std::size_t d = 0; d < dims.size(); ++d) out.cell[d] = fine[d].step();
  } else {
    for (std::size_t d = 0; d < dims.size(); ++d) {
      bounds[d] = refine_around(dims[d], out.coarse_index[d], 2);
      out.cell[d] = dims[d].step();
    }
  }

  // Batch paths use normal equations; re-score the incumbent on the direct path.
  out.rss = point(out.best);
  if (config.polish) {
    // Coordinate sweeps until a sweep no longer improves the residual.
    for (int sweep = 0; sweep < 64; ++sweep) {
      const double before = out.rss;
      bool moved = false;
      for (std::size_t d = 0; d < dims.size(); ++d) {
        if (!(bounds[d].hi > bounds[d].lo)) continue;
        Point trial = out.best;
        auto f = [&](double v) {
          trial[d] = v;
          return point(trial);
        };
        std::uintmax_t iters = 200;
        const auto [x, fx] = boost::math::tools::brent_find_minima(f, bounds[d].lo, bounds[d].hi, 45, iters);
        if (fx < out.rss) {
          out.best[d] = x;
          out.rss = fx;
          moved = true;
        }
      }
      if (!moved || !(out.rss < before * (1.0 - 1e-10))) break;
    }
  }
  return out;
}

Eigen::VectorXd log_tau(const Eigen::VectorXd& t, double t_c) {
  return ((t_c - t.array()) / t_c).log().matrix();
}

// Shape of the divergence: ln(tau) for the log form, tau^-m for the power form.
Eigen::VectorXd divergence_shape(const Eigen::VectorXd& lt, Form form, double m_prime) {
  if (form == Form::log) return lt;
  return (-m_prime * lt.array()).exp().matrix();
}

struct LinearSolve {
  Eigen::VectorXd beta;
  double rss = kInf;
  Eigen::MatrixXd gram;
};

LinearSolve solve_direct(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  LinearSolve s;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) return s;
  s.beta = qr.solve(y);
  s.rss = (y - design * s.beta).squaredNorm();
  s.gram = design.transpose() * design;
  return s;
}

// Solves a small normal-equation system; returns +inf when it is not positive definite.
template <int N>
double normal_rss(const Eigen::Matrix<double, N, N>& gram, const Eigen::Matrix<double, N, 1>& rhs, double yy) {
  Eigen::LDLT<Eigen::Matrix<double, N, N>> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return kInf;
  const auto d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-12 * d.maxCoeff()) return kInf;
  const Eigen::Matrix<double, N, 1> beta = ldlt.solve(rhs);
  return std::max(0.0, yy - beta.dot(rhs));
}

double total_ss(const Eigen::VectorXd& y) { return (y.array() - y.mean()).square().sum(); }

void check_observations(const Observations& obs, std::size_t min_points, const char* what) {
  if (obs.size() < min_points)
    throw Error(std::string("lppl: ") + what + " needs at least " + std::to_string(min_points) + " points");
  if (obs.y.maxCoeff() == obs.y.minCoeff()) throw Error("lppl: singular design (constant series)");
}

Grid admissible_t_c(const Observations& obs, const FitConfig& config) {
  const Grid g = config.t_c_grid ? *config.t_c_grid : default_t_c_grid(obs, config);
  if (g.points == 0) throw Error("lppl: empty t_c grid");
  const double last = obs.t.maxCoeff();
  for (std::size_t i = 0; i < g.points; ++i)
    if (g.at(i) > last && g.at(i) > 0.0) return {g.at(i), g.hi, g.points - i};
  throw Error("lppl: all t_c candidates are at or before the window end");
}

void check_grid(const Grid& g, const char* name) {
  if (g.points == 0) throw Error(std::string("lppl: empty ") + name + " grid");
  if (g.hi < g.lo) throw Error(std::string("lppl: inverted ") + name + " grid");
}

// ---------------------------------------------------------------------------

struct DivergenceSolution {
  double A = 0.0;
  double B = 0.0;
  double rss = kInf;
};

DivergenceSolution solve_divergence(const Observations& obs, Form form, double t_c, double m_prime) {
  const Eigen::VectorXd g = divergence_shape(log_tau(obs.t, t_c), form, m_prime);
  Eigen::MatrixXd x(g.size(), 2);
  x.col(0).setOnes();
  x.col(1) = g;
  const auto s = solve_direct(x, obs.y);
  if (!std::isfinite(s.rss)) return {};
  return {s.beta[0], s.beta[1], s.rss};
}

}  // namespace

Observations Observations::from(const TimeSeries& s) {
  Observations o;
  o.t.resize(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) o.t[static_cast<Eigen::Index>(i)] = static_cast<double>(s.timestamps()[i]);
  o.y = s.values();
  return o;
}

Grid default_t_c_grid(const Observations& obs, const FitConfig& config) {
  const double first = obs.t.minCoeff();
  const double last = obs.t.maxCoeff();
  const double length = last - first + 1.0;
  const double hi = last + config.t_c_horizon * length;
  return {last + 1.0, std::max(hi, last + 1.0), hi > last + 1.0 ? config.t_c_points : 1};
}

DivergenceFit fit_divergence(const Observations& obs, const FitConfig& config) {
  check_observations(obs, 20, "divergence fit");
  const Grid t_c = admissible_t_c(obs, config);
  check_grid(config.m_prime_grid, "m'");
  std::vector<Grid> dims{t_c};
  if (config.form == Form::power) {
    if (!(config.m_prime_grid.lo > 0.0) || !(config.m_prime_grid.hi < 1.0))
      throw Error("lppl: m' grid must lie inside (0, 1)");
    dims.push_back(config.m_prime_grid);
  }

  const Eigen::VectorXd yc = (obs.y.array() - obs.y.mean()).matrix();
  const double yy = yc.squaredNorm();
  const Form form = config.form;

  BatchFn batch = [&](const std::vector<Grid>& g) {
    const std::size_t inner = g.size() > 1 ? g[1].points : 1;
    std::vector<double> rss(flat_size(g), kInf);
    parallel_for(g[0].points, [&](std::size_t i) {
      const Eigen::VectorXd lt = log_tau(obs.t, g[0].at(i));
      for (std::size_t j = 0; j < inner; ++j) {
        const double m = g.size() > 1 ? g[1].at(j) : 0.0;
        const Eigen::VectorXd shape = divergence_shape(lt, form, m);
        const Eigen::ArrayXd gc = shape.array() - shape.mean();
        const double gg = gc.square().sum();
        if (!(gg > 0.0) || !std::isfinite(gg)) continue;
        const double gy = (gc * yc.array()).sum();
        rss[i * inner + j] = std::max(0.0, yy - gy * gy / gg);
      }
    });
    return rss;
  };
  PointFn point = [&](const Point& p) {
    return solve_divergence(obs, form, p[0], form == Form::power ? p[1] : 0.0).rss;
  };

  const auto out = grid_search(dims, batch, point, config);
  DivergenceFit fit;
  fit.form = form;
  fit.t_c = out.best[0];
  fit.m_prime = form == Form::power ? out.best[1] : 0.0;
  const auto sol = solve_divergence(obs, form, fit.t_c, fit.m_prime);
  fit.A = sol.A;
  fit.B = sol.B;
  fit.rss = sol.rss;
  fit.r_squared = std::clamp(1.0 - sol.rss / total_ss(obs.y), 0.0, 1.0);
  fit.t_c_step = t_c.step();
  fit.t_c_at_edge = t_c.points > 1 && (out.coarse_index[0] == 0 || out.coarse_index[0] + 1 == t_c.points);
  return fit;
}

OscillationFit fit_oscillation(const Observations& obs, const DivergenceFit& div, const FitConfig& config) {
  check_observations(obs, 20, "oscillation fit");
  const Eigen::VectorXd weight = div.B * divergence_shape(log_tau(obs.t, div.t_c), div.form, div.m_prime);
  if (!(weight.cwiseAbs().maxCoeff() > 1e-12 * obs.y.cwiseAbs().maxCoeff()))
    throw Error("lppl: divergence fit is degenerate (B ~ 0)");
  const Eigen::VectorXd resid = (obs.y.array() - div.A).matrix() - weight;
  const auto n = resid.size();

  const Grid t_c = admissible_t_c(obs, config);
  const bool cosine = config.oscillation == Oscillation::cosine;
  std::vector<Grid> dims{t_c};
  if (cosine) {
    check_grid(config.omega_grid, "omega");
    if (!(config.omega_grid.lo > 0.0)) throw Error("lppl: omega grid must be positive");
    dims.push_back(config.omega_grid);
  }

  // Nuisance columns: a level offset and, for the cosine term, a rescaling of
  // the divergence. Both are projected out of the residual and the columns.
  Eigen::MatrixXd nuisance(n, 0);
  if (config.oscillation_offsets) {
    nuisance.resize(n, cosine ? 2 : 1);
    nuisance.col(0).setOnes();
    if (cosine) nuisance.col(1) = weight;
  }
  const Eigen::Index k = nuisance.cols();
  Eigen::MatrixXd q(n, k);
  if (k > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(nuisance);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  }
  const Eigen::VectorXd rt = k > 0 ? Eigen::VectorXd(resid - q * (q.transpose() * resid)) : resid;
  const double rr = rt.squaredNorm();

  // Columns multiply the fitted divergence so the oscillation is relative to it.
  auto design = [&](double tc, double omega) {
    const Eigen::VectorXd lt = log_tau(obs.t, tc);
    Eigen::MatrixXd x(lt.size(), 2 + k);
    if (cosine) {
      x.col(0) = weight.array() * (omega * lt.array()).cos();
      x.col(1) = weight.array() * (omega * lt.array()).sin();
    } else {
      x.col(0) = weight.array() * lt.array();
      x.col(1) = weight;
    }
    if (k > 0) x.rightCols(k) = nuisance;
    return x;
  };

  // Projected 2x2 system from raw sums: u'Mu = u'u - (Q'u)'(Q'u), u'Mr = u'rt.
  struct Acc {
    double uu11 = 0, uu12 = 0, uu22 = 0, ur1 = 0, ur2 = 0;
    double q11 = 0, q21 = 0, q12 = 0, q22 = 0;  // q_row' u_col for the (up to) two nuisance directions

    void add(double u1, double u2, double r, double qa, double qb) {
      uu11 += u1 * u1;
      uu12 += u1 * u2;
      uu22 += u2 * u2;
      ur1 += u1 * r;
      ur2 += u2 * r;
      q11 += qa * u1;
      q21 += qb * u1;
      q12 += qa * u2;
      q22 += qb * u2;
    }
    double rss(double total) const {
      Eigen::Matrix2d gram;
      gram << uu11 - q11 * q11 - q21 * q21, uu12 - q11 * q12 - q21 * q22, uu12 - q11 * q12 - q21 * q22,
          uu22 - q12 * q12 - q22 * q22;
      return normal_rss<2>(gram, Eigen::Vector2d(ur1, ur2), total);
    }
  };
  const auto qcol = [&](Eigen::Index c, Eigen::Index p) { return c < k ? q(p, c) : 0.0; };

  BatchFn batch = [&](const std::vector<Grid>& g) {
    const std::size_t n_omega = g.size() > 1 ? g[1].points : 1;
    std::vector<double> rss(flat_size(g), kInf);
    parallel_for(g[0].points, [&](std::size_t i) {
      const Eigen::VectorXd lt = log_tau(obs.t, g[0].at(i));
      if (!cosine) {
        Acc a;
        for (Eigen::Index p = 0; p < n; ++p) a.add(weight[p] * lt[p], weight[p], rt[p], qcol(0, p), qcol(1, p));
        rss[i] = a.rss(rr);
        return;
      }
      // cos/sin of omega * ln(tau) advance along the uniform omega grid by rotation.
      std::vector<Acc> acc(n_omega);
      const double lo = g[1].lo;
      const double step = g[1].step();
      for (Eigen::Index p = 0; p < n; ++p) {
        double c = std::cos(lo * lt[p]);
        double s = std::sin(lo * lt[p]);
        const double cd = std::cos(step * lt[p]);
        const double sd = std::sin(step * lt[p]);
        const double w = weight[p];
        const double r = rt[p];
        const double qa = qcol(0, p);
        const double qb = qcol(1, p);
        for (std::size_t j = 0; j < n_omega; ++j) {
          acc[j].add(w * c, w * s, r, qa, qb);
          const double cn = c * cd - s * sd;
          s = s * cd + c * sd;
          c = cn;
        }
      }
      for (std::size_t j = 0; j < n_omega; ++j) rss[i * n_omega + j] = acc[j].rss(rr);
    });
    return rss;
  };
  PointFn point = [&](const Point& p) { return solve_direct(design(p[0], cosine ? p[1] : 1.0), resid).rss; };

  const auto out = grid_search(dims, batch, point, config);
  OscillationFit fit;
  fit.oscillation = config.oscillation;
  fit.t_c = out.best[0];
  fit.omega = cosine ? out.best[1] : 1.0;
  const auto sol = solve_direct(design(fit.t_c, fit.omega), resid);
  if (!std::isfinite(sol.rss)) throw Error("lppl: singular oscillation system");
  fit.rss = sol.rss;
  fit.r_squared = rr > 0.0 ? std::clamp(1.0 - sol.rss / rr, 0.0, 1.0) : 0.0;

  // Covariance of the full nonlinear fit: the searched t_c (and omega) enter
  // through their model derivatives, so the amplitude error reflects the search.
  const Eigen::MatrixXd x = design(fit.t_c, fit.omega);
  const Eigen::Index n_nl = cosine ? 2 : 1;
  Eigen::MatrixXd jac(n, x.cols() + n_nl);
  jac.leftCols(x.cols()) = x;
  {
    const double h = 1e-6 * std::max(1.0, fit.t_c);
    jac.col(x.cols()) = (design(fit.t_c + h, fit.omega) - design(fit.t_c - h, fit.omega)) * sol.beta / (2.0 * h);
  }
  if (cosine) {
    const double h = 1e-6 * std::max(1.0, fit.omega);
    jac.col(x.cols() + 1) = (design(fit.t_c, fit.omega + h) - design(fit.t_c, fit.omega - h)) * sol.beta / (2.0 * h);
  }
  Eigen::VectorXd scale = jac.colwise().norm().transpose();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < jac.cols(); ++c)
    if (c < x.cols() || scale[c] > 1e-12 * scale.head(2).maxCoeff()) keep.push_back(c);
  Eigen::MatrixXd jn(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) jn.col(static_cast<Eigen::Index>(c)) = jac.col(keep[c]) / scale[keep[c]];
  const auto dof = static_cast<double>(std::max<Eigen::Index>(n - jn.cols(), 1));
  const Eigen::MatrixXd gram_inv = (jn.transpose() * jn).ldlt().solve(Eigen::MatrixXd::Identity(jn.cols(), jn.cols()));
  Eigen::Matrix2d cov = (sol.rss / dof) * gram_inv.topLeftCorner<2, 2>();
  cov = scale.head<2>().cwiseInverse().asDiagonal() * cov * scale.head<2>().cwiseInverse().asDiagonal();
  const double b1 = sol.beta[0];
  const double b2 = sol.beta[1];
  if (cosine) {
    // b1 = C cos(phi), b2 = -C sin(phi)
    fit.C = std::hypot(b1, b2);
    fit.phi = std::atan2(-b2, b1);
    if (fit.C > 0.0) {
      const Eigen::Vector2d grad(b1 / fit.C, b2 / fit.C);
      fit.C_stderr = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
    } else {
      fit.C_stderr = std::sqrt(std::max(0.0, 0.5 * cov.trace()));
    }
  } else {
    // omega is pinned to 1: only C*omega and C*phi are identifiable.
    fit.C = b1;
    fit.phi = b1 != 0.0 ? b2 / b1 : 0.0;
    fit.C_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
  }
  fit.t_c_step = t_c.step();
  fit.t_c_at_edge = t_c.points > 1 && (out.coarse_index[0] == 0 || out.coarse_index[0] + 1 == t_c.points);
  return fit;
}

SplitFitResult split_fit(const Observations& obs, const FitConfig& config) {
  SplitFitResult r;
  r.divergence = fit_divergence(obs, config);
  r.oscillation = fit_oscillation(obs, r.divergence, config);
  r.t_c_div = r.divergence.t_c;
  r.t_c_osc = r.oscillation.t_c;
  r.gap = r.t_c_div - r.t_c_osc;
  if (r.divergence.r_squared < config.min_r_squared) r.notes.push_back("divergence fit explains little variance");
  if (r.divergence.t_c_at_edge) r.notes.push_back("divergence t_c at grid edge");
  if (r.oscillation.t_c_at_edge) r.notes.push_back("oscillation t_c at grid edge");
  if (!(std::abs(r.oscillation.C) >= 3.0 * r.oscillation.C_stderr)) r.notes.push_back("oscillation amplitude not significant");
  r.low_confidence = !r.notes.empty();
  return r;
}

double evaluate(const SplitFitResult& fit, double t) {
  const auto& d = fit.divergence;
  const auto& o = fit.oscillation;
  const double ltd = std::log(reduced_time(d.t_c, t));
  const double g = d.form == Form::power ? std::exp(-d.m_prime * ltd) : ltd;
  const double lto = std::log(reduced_time(o.t_c, t));
  const double osc = o.oscillation == Oscillation::cosine ? std::cos(o.omega * lto + o.phi) : o.omega * lto + o.phi;
  return d.A + d.B * g * (1.0 + o.C * osc);
}

FullFitResult full_fit(const Observations& obs, const FitConfig& config) {
  check_observations(obs, 30, "full fit");
  const Grid t_c = admissible_t_c(obs, config);
  const bool cosine = config.oscillation == Oscillation::cosine;
  const bool power = config.form == Form::power;
  std::vector<Grid> dims{t_c};
  if (cosine) {
    check_grid(config.omega_grid, "omega");
    if (!(config.omega_grid.lo > 0.0)) throw Error("lppl: omega grid must be positive");
    dims.push_back(config.omega_grid);
  } else {
    dims.push_back(Grid{1.0, 1.0, 1});
  }
  if (power) {
    check_grid(config.m_prime_grid, "m'");
    if (!(config.m_prime_grid.lo > 0.0) || !(config.m_prime_grid.hi < 1.0))
      throw Error("lppl: m' grid must lie inside (0, 1)");
    dims.push_back(config.m_prime_grid);
  }

  const Eigen::VectorXd yc = (obs.y.array() - obs.y.mean()).matrix();
  const double yy = yc.squaredNorm();

  // Cosine: [1, g, g cos, g sin]. Linear (omega = 1, phi = 0): [1, g, g ln(tau)].
  auto design = [&](const Point& p) {
    const Eigen::VectorXd lt = log_tau(obs.t, p[0]);
    const Eigen::VectorXd g = divergence_shape(lt, config.form, power ? p[2] : 0.0);
    Eigen::MatrixXd x(lt.size(), cosine ? 4 : 3);
    x.col(0).setOnes();
    x.col(1) = g;
    if (cosine) {
      x.col(2) = g.array() * (p[1] * lt.array()).cos();
      x.col(3) = g.array() * (p[1] * lt.array()).sin();
    } else {
      x.col(2) = g.array() * lt.array();
    }
    return x;
  };

  BatchFn batch = [&](const std::vector<Grid>& g) {
    const std::size_t n_omega = g[1].points;
    const std::size_t n_m = power ? g[2].points : 1;
    std::vector<double> rss(flat_size(g), kInf);
    parallel_for(g[0].points, [&](std::size_t i) {
      const Eigen::VectorXd lt = log_tau(obs.t, g[0].at(i));
      const auto n = lt.size();
      Eigen::MatrixXd shapes(n, static_cast<Eigen::Index>(n_m));
      for (std::size_t k = 0; k < n_m; ++k)
        shapes.col(static_cast<Eigen::Index>(k)) = divergence_shape(lt, config.form, power ? g[2].at(k) : 0.0);

      if (!cosine) {
        for (std::size_t k = 0; k < n_m; ++k) {
          Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
          Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
          for (Eigen::Index p = 0; p < n; ++p) {
            const double gv = shapes(p, static_cast<Eigen::Index>(k));
            const Eigen::Vector3d u(1.0, gv, gv * lt[p]);
            gram.noalias() += u * u.transpose();
            rhs += u * yc[p];
          }
          rss[i * n_m + k] = normal_rss<3>(gram, rhs, yy);
        }
        return;
      }

      // Accumulate the 10 distinct Gram entries and 4 right-hand sides per (omega, m').
      std::vector<std::array<double, 14>> acc(n_omega * n_m, std::array<double, 14>{});
      const double lo = g[1].lo;
      const double step = g[1].step();
      for (Eigen::Index p = 0; p < n; ++p) {
        double c = std::cos(lo * lt[p]);
        double s = std::sin(lo * lt[p]);
        const double cd = std::cos(step * lt[p]);
        const double sd = std::sin(step * lt[p]);
        const double y = yc[p];
        for (std::size_t j = 0; j < n_omega; ++j) {
          for (std::size_t k = 0; k < n_m; ++k) {
            const double gv = shapes(p, static_cast<Eigen::Index>(k));
            const double u1 = gv;
            const double u2 = gv * c;
            const double u3 = gv * s;
            auto& a = acc[j * n_m + k];
            a[0] += 1.0;
            a[1] += u1;
            a[2] += u2;
            a[3] += u3;
            a[4] += u1 * u1;
            a[5] += u1 * u2;
            a[6] += u1 * u3;
            a[7] += u2 * u2;
            a[8] += u2 * u3;
            a[9] += u3 * u3;
            a[10] += y;
            a[11] += u1 * y;
            a[12] += u2 * y;
            a[13] += u3 * y;
          }
          const double cn = c * cd - s * sd;
          s = s * cd + c * sd;
          c = cn;
        }
      }
      for (std::size_t j = 0; j < n_omega; ++j) {
        for (std::size_t k = 0; k < n_m; ++k) {
          const auto& a = acc[j * n_m + k];
          Eigen::Matrix4d gram;
          gram << a[0], a[1], a[2], a[3],  //
              a[1], a[4], a[5], a[6],      //
              a[2], a[5], a[7], a[8],      //
              a[3], a[6], a[8], a[9];
          const Eigen::Vector4d rhs(a[10], a[11], a[12], a[13]);
          rss[(i * n_omega + j) * n_m + k] = normal_rss<4>(gram, rhs, yy);
        }
      }
    });
    return rss;
  };
  PointFn point = [&](const Point& p) { return solve_direct(design(p), obs.y).rss; };

  const auto out = grid_search(dims, batch, point, config);
  const auto sol = solve_direct(design(out.best), obs.y);
  if (!std::isfinite(sol.rss)) throw Error("lppl: singular inner system at the optimum");

  FullFitResult fit;
  Params& p = fit.params;
  p.form = config.form;
  p.oscillation = config.oscillation;
  p.t_c = out.best[0];
  p.omega = out.best[1];
  p.m_prime = power ? out.best[2] : 0.0;
  p.A = sol.beta[0];
  p.B = sol.beta[1];
  if (cosine) {
    // beta2 = B C cos(phi), beta3 = -B C sin(phi)
    const double c1 = p.B != 0.0 ? sol.beta[2] / p.B : 0.0;
    const double c2 = p.B != 0.0 ? sol.beta[3] / p.B : 0.0;
    p.C = std::hypot(c1, c2);
    p.phi = std::atan2(-c2, c1);
  } else {
    p.C = p.B != 0.0 ? sol.beta[2] / p.B : 0.0;
    p.phi = 0.0;
  }
  fit.rss = sol.rss;
  fit.r_squared = std::clamp(1.0 - sol.rss / total_ss(obs.y), 0.0, 1.0);
  fit.t_c_step = t_c.step();
  fit.omega_step = dims[1].step();
  fit.t_c_cell = out.cell[0];
  fit.omega_cell = out.cell[1];
  return fit;
}

// ---------------------------------------------------------------------------

GapAssessment assess_gaps(const std::vector<double>& gaps, const std::vector<bool>& confident,
                          const TrackConfig& config) {
  if (!confident.empty() && confident.size() != gaps.size()) throw Error("assess_gaps: length mismatch");
  if (config.k < 2) throw Error("assess_gaps: k must be at least 2");
  auto trusted = [&](std::size_t i) { return confident.empty() || confident[i]; };
  const double tol = config.monotone_tolerance;

  GapAssessment a;
  for (std::size_t end = config.k - 1; end < gaps.size(); ++end) {
    const std::size_t begin = end + 1 - config.k;
    bool ok = std::abs(gaps[end]) < config.threshold;
    for (std::size_t i = begin; ok && i <= end; ++i) {
      ok = trusted(i) && std::isfinite(gaps[i]);
      if (ok && i > begin && config.rule == ConvergenceRule::strict)
        ok = std::abs(gaps[i]) <= std::abs(gaps[i - 1]) + tol;
    }
    if (ok && config.rule == ConvergenceRule::trend) {
      const double mid = 0.5 * static_cast<double>(config.k - 1);
      double sxy = 0.0;
      for (std::size_t i = begin; i <= end; ++i) sxy += (static_cast<double>(i - begin) - mid) * std::abs(gaps[i]);
      ok = sxy < 0.0;
    }
    if (ok) {
      a.converged = true;
      a.flagged_at = end;
      break;
    }
  }
  for (std::size_t i = 1; i + 1 < gaps.size(); ++i) {
    if (!trusted(i - 1) || !trusted(i) || !trusted(i + 1)) continue;
    const double here = std::abs(gaps[i]);
    if (std::abs(gaps[i - 1]) > here + tol && std::abs(gaps[i + 1]) > here + tol) a.near_to_crash.push_back(i);
  }
  return a;
}

CrashRiskTrack crash_risk_track(const TimeSeries& series, const TrackConfig& config) {
  if (config.step == 0) throw Error("crash_risk_track: step must be positive");
  if (config.window_length < 20 || config.window_length > series.size())
    throw Error("crash_risk_track: window length must be in [20, series length]");
  std::vector<std::size_t> ends;
  for (std::size_t end = config.window_length - 1; end < series.size(); end += config.step) ends.push_back(end);
  if (ends.size() < config.k)
    throw Error("crash_risk_track: insufficient windows (" + std::to_string(ends.size()) + " < " +
                std::to_string(config.k) + ")");

  CrashRiskTrack track;
  std::vector<double> gaps;
  std::vector<bool> confident;
  for (std::size_t end : ends) {
    const std::size_t start = config.policy == WindowPolicy::growing ? 0 : end + 1 - config.window_length;
    const TimeSeries w = window(series, start, end + 1 - start);
    TrackEntry e;
    e.window_end = series.timestamps()[end];
    e.window_points = w.size();
    e.result = split_fit(w, config.fit);
    gaps.push_back(e.result.gap);
    confident.push_back(!e.result.low_confidence);
    track.entries.push_back(std::move(e));
  }
  const auto a = assess_gaps(gaps, confident, config);
  track.convergence_flag = a.converged;
  if (a.flagged_at) track.flagged_window_end = track.entries[*a.flagged_at].window_end;
  for (std::size_t i : a.near_to_crash) track.near_to_crash.push_back(track.entries[i].window_end);
  return track;
}

std::string to_string(Form f) { return f == Form::power ? "power" : "log"; }

std::string to_string(Oscillation o) { return o == Oscillation::cosine ? "cos" : "linear"; }

}  // namespace econokit::lppl
