#include "econokit/distance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "econokit/error.hpp"
#include "econokit/parallel.hpp"
#include "econokit/stats.hpp"
#include "econokit/zipf.hpp"

namespace econokit::distance {
namespace {

void check_aligned(const TimeSeries& a, const TimeSeries& b, Window w) {
  if (w.start + w.length > a.size() || w.start + w.length > b.size())
    throw Error("distance: window extends past the end of a series");
  if (!std::equal(a.timestamps().begin() + static_cast<std::ptrdiff_t>(w.start),
                  a.timestamps().begin() + static_cast<std::ptrdiff_t>(w.start + w.length),
                  b.timestamps().begin() + static_cast<std::ptrdiff_t>(w.start)))
    throw Error("distance: windows do not align (timestamps differ)");
}

double shannon_bits(const zipf::WordTable& t) {
  double h = 0.0;
  for (const auto& [w, c] : t.counts()) {
    const double p = static_cast<double>(c) / static_cast<double>(t.total());
    h -= p * std::log2(p);
  }
  return h;
}

double pair_distance(const TimeSeries& a, const TimeSeries& b, Window w, Kind kind, std::size_t m) {
  return kind == Kind::correlation ? correlation_distance(a, b, w) : entropy_distance(a, b, w, m);
}

}  // namespace

double correlation_distance(const Eigen::Ref<const Eigen::VectorXd>& returns_a,
                            const Eigen::Ref<const Eigen::VectorXd>& returns_b) {
  if (returns_a.size() != returns_b.size()) throw Error("correlation distance: length mismatch");
  if (returns_a.size() < 2) throw Error("correlation distance: need at least 3 points");
  const double c = pearson(returns_a, returns_b);
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - c)));
}

double correlation_distance(const TimeSeries& a, const TimeSeries& b, Window w) {
  if (w.length < 3) throw Error("correlation distance: need at least 3 points");
  check_aligned(a, b, w);
  return correlation_distance(returns(window(a, w.start, w.length)).values,
                              returns(window(b, w.start, w.length)).values);
}

double block_entropy_rate(const std::string& letters, std::size_t m) {
  if (m == 0) throw Error("block length must be positive");
  if (letters.size() < m) throw Error("block length exceeds sequence length");
  const double hm = shannon_bits(zipf::count_words(letters, m, true));
  const double hm1 = m == 1 ? 0.0 : shannon_bits(zipf::count_words(letters, m - 1, true));
  return hm - hm1;
}

double entropy_distance(const TimeSeries& a, const TimeSeries& b, Window w, std::size_t m) {
  if (m == 0) throw Error("entropy distance: block length must be positive");
  if (w.length < 4 * m) throw Error("entropy distance: window length must be at least 4 x block length");
  check_aligned(a, b, w);
  const auto rate = [&](const TimeSeries& s) {
    const std::string letters = zipf::encode(returns(window(s, w.start, w.length)), zipf::Alphabet::two_letter());
    if (letters.find_first_not_of(letters.front()) == std::string::npos)
      throw Error("entropy distance: degenerate encoding of '" + s.label() + "' (single letter throughout)");
    return block_entropy_rate(letters, m);
  };
  return std::abs(rate(a) - rate(b));
}

namespace {

void check_structure(const DistanceMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.labels.size());
  if (m.d.rows() != n || m.d.cols() != n) throw Error("distance matrix: shape does not match labels");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m.d(i, i) != 0.0) throw Error("distance matrix: non-zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = m.d(i, j);
      if (!std::isfinite(v)) throw Error("distance matrix: non-finite entry");
      if (v < 0.0) throw Error("distance matrix: negative entry");
      if (v != m.d(j, i)) throw Error("distance matrix: not symmetric");
    }
  }
}

}  // namespace

void DistanceMatrix::validate() const {
  check_structure(*this);
  if (kind == Kind::correlation && (d.array() > 2.0).any())
    throw Error("distance matrix: correlation distance above 2");
}

DistanceMatrix distance_matrix(const std::vector<TimeSeries>& set, Window window, Kind kind, std::size_t m) {
  if (set.size() < 2) throw Error("distance matrix: need at least two series");
  const std::size_t n = set.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    values[k] = pair_distance(set[pairs[k].first], set[pairs[k].second], window, kind, m);
  });

  DistanceMatrix out;
  out.window = window;
  out.kind = kind;
  out.d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& s : set) out.labels.push_back(s.label());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].first);
    const auto j = static_cast<Eigen::Index>(pairs[k].second);
    out.d(i, j) = out.d(j, i) = values[k];
  }
  return out;
}

MeanDistanceTrack rolling_mean_distance(const std::vector<TimeSeries>& set, std::size_t window_length, std::size_t step,
                                        Kind kind, const std::vector<std::string>& subset, std::size_t m) {
  std::vector<TimeSeries> chosen;
  if (subset.empty()) {
    chosen = set;
  } else {
    for (const auto& name : subset) {
      auto it = std::find_if(set.begin(), set.end(), [&](const TimeSeries& s) { return s.label() == name; });
      if (it == set.end()) throw Error("rolling distance: unknown series '" + name + "'");
      chosen.push_back(*it);
    }
  }
  if (chosen.size() < 2) throw Error("rolling distance: need at least two series in the subset");
  std::vector<TimeSeries> aligned;
  try {
    aligned = align_common(chosen);
  } catch (const Error&) {
    throw Error("rolling distance: insufficient common support");
  }
  if (aligned.front().size() < window_length) throw Error("rolling distance: insufficient common support");

  MeanDistanceTrack track;
  for (const auto& s : aligned) track.subset.push_back(s.label());
  for (std::size_t start : rolling_window_starts(aligned.front().size(), window_length, step)) {
    const DistanceMatrix dm = distance_matrix(aligned, {start, window_length}, kind, m);
    const auto n = dm.d.rows();
    const double mean = dm.d.sum() / static_cast<double>(n * (n - 1));
    track.points.push_back({start, aligned.front().timestamps()[start + window_length - 1], mean});
  }
  if (track.points.size() >= 3) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(track.points.size()));
    Eigen::VectorXd y(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      x[k] = static_cast<double>(k);
      y[k] = track.points[static_cast<std::size_t>(k)].mean_distance;
    }
    const auto fit = fit_line(x, y);
    track.slope = fit.slope;
    track.slope_stderr = fit.slope_stderr;
  }
  return track;
}

double HierarchyResult::total_weight() const {
  double w = 0.0;
  for (const auto& e : mst_edges) w += e.distance;
  return w;
}

HierarchyResult mst(const DistanceMatrix& matrix) {
  check_structure(matrix);
  const std::size_t n = matrix.labels.size();
  if (n < 2) throw Error("mst: need at least two labels");
  const auto& lab = matrix.labels;

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      edges.push_back({i, j, matrix.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  const auto key = [&](const Edge& e) {
    const auto& a = lab[e.i];
    const auto& b = lab[e.j];
    return a < b || (a == b && e.i < e.j) ? std::make_pair(e.i, e.j) : std::make_pair(e.j, e.i);
  };
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge& x, const Edge& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    const auto kx = key(x);
    const auto ky = key(y);
    if (lab[kx.first] != lab[ky.first]) return lab[kx.first] < lab[ky.first];
    return lab[kx.second] < lab[ky.second];
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> cluster_id(n);  // root -> current cluster id
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  HierarchyResult out;
  out.labels = lab;
  out.ultrametric = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    std::size_t ra = find(e.i);
    std::size_t rb = find(e.j);
    if (ra == rb) continue;
    const auto [p, q] = key(e);
    out.mst_edges.push_back({p, q, e.distance});
    for (std::size_t u : members[ra])
      for (std::size_t v : members[rb])
        out.ultrametric(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) =
            out.ultrametric(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = e.distance;
    const std::size_t ca = std::min(cluster_id[ra], cluster_id[rb]);
    const std::size_t cb = std::max(cluster_id[ra], cluster_id[rb]);
    out.linkage.push_back({ca, cb, e.distance, members[ra].size() + members[rb].size()});
    if (members[ra].size() < members[rb].size()) std::swap(ra, rb);
    parent[rb] = ra;
    members[ra].insert(members[ra].end(), members[rb].begin(), members[rb].end());
    members[rb].clear();
    cluster_id[ra] = n + out.linkage.size() - 1;
    if (out.mst_edges.size() == n - 1) break;
  }
  return out;
}

std::string to_string(Kind k) { return k == Kind::correlation ? "correlation" : "entropy"; }

}  // namespace econokit::distance
