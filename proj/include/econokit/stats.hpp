#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "econokit/error.hpp"

namespace econokit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Ordinary least-squares line y = intercept + slope * x.
template <typename Scalar>
struct LineFit {
  Scalar slope{};
  Scalar intercept{};
  Scalar slope_stderr{};
  Scalar r_squared{};
  Eigen::Index n = 0;
};

template <typename Derived>
typename Derived::Scalar mean(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw Error("mean of empty vector");
  return x.mean();
}

/// Population (1/N) variance.
template <typename Derived>
typename Derived::Scalar population_variance(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar mu = mean(x);
  return (x.array() - mu).square().mean();
}

/// Population covariance written as E[xy] - E[x]E[y] is numerically poor;
/// this centres first, which is algebraically the same quantity.
template <typename DX, typename DY>
typename DX::Scalar population_covariance(const Eigen::MatrixBase<DX>& x,
                                          const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size()) throw Error("covariance: length mismatch");
  const auto mx = mean(x);
  const auto my = mean(y);
  return ((x.array() - mx) * (y.array() - my)).mean();
}

template <typename DX, typename DY>
typename DX::Scalar pearson(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  if (x.size() != y.size()) throw Error("correlation: length mismatch");
  if (x.size() < 2 || x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff())
    throw Error("correlation undefined for a constant series");
  const auto xc = (x.array() - mean(x)).matrix().eval();
  const auto yc = (y.array() - mean(y)).matrix().eval();
  const Scalar sxx = xc.squaredNorm();
  const Scalar syy = yc.squaredNorm();
  if (!(sxx > 0) || !(syy > 0)) throw Error("correlation undefined for a constant series");
  const Scalar c = xc.dot(yc) / std::sqrt(sxx * syy);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

template <typename DX, typename DY>
LineFit<typename DX::Scalar> fit_line(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  const Eigen::Index n = x.size();
  if (n != y.size()) throw Error("fit_line: length mismatch");
  if (n < 2) throw Error("fit_line: need at least two points");
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const auto dy = (y.array() - my).eval();
  const Scalar sxx = dx.square().sum();
  if (!(sxx > 0)) throw Error("fit_line: abscissae are all equal");
  const Scalar sxy = (dx * dy).sum();
  const Scalar syy = dy.square().sum();

  LineFit<Scalar> fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const Scalar sse = std::max(Scalar(0), (dy - fit.slope * dx).square().sum());
  fit.r_squared = syy > 0 ? std::clamp(Scalar(1) - sse / syy, Scalar(0), Scalar(1)) : Scalar(1);
  fit.slope_stderr = n > 2 ? std::sqrt(sse / Scalar(n - 2) / sxx) : std::numeric_limits<Scalar>::quiet_NaN();
  return fit;
}

}  // namespace econokit
