#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "econokit/series.hpp"

namespace econokit::distance {

enum class Kind { correlation, entropy };

/// Positions [start, start + length) of the price series.
struct Window {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// sqrt(2 (1 - c)) with c the Pearson coefficient of two return vectors.
double correlation_distance(const Eigen::Ref<const Eigen::VectorXd>& returns_a,
                            const Eigen::Ref<const Eigen::VectorXd>& returns_b);
/// Same, on the simple returns of two windowed price series.
double correlation_distance(const TimeSeries& a, const TimeSeries& b, Window window);

/// Block entropy rate H_m - H_{m-1} in bits, overlapping blocks.
double block_entropy_rate(const std::string& letters, std::size_t m);

/// |H_a - H_b| over up/down encodings of the windowed returns.
double entropy_distance(const TimeSeries& a, const TimeSeries& b, Window window, std::size_t block_length = 2);

struct DistanceMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd d;
  Window window;
  Kind kind = Kind::correlation;

  /// Throws unless d is square, symmetric, zero on the diagonal, finite and
  /// non-negative (bounded by 2 for correlation).
  void validate() const;
};

/// All pairwise distances of `set` over one window. Series must share timestamps.
DistanceMatrix distance_matrix(const std::vector<TimeSeries>& set, Window window, Kind kind,
                               std::size_t block_length = 2);

struct TrackPoint {
  std::size_t start = 0;
  std::int64_t end_time = 0;
  double mean_distance = 0.0;
};

struct MeanDistanceTrack {
  std::vector<std::string> subset;
  std::vector<TrackPoint> points;
  /// OLS slope of mean distance on window index; negative means convergence.
  double slope = 0.0;
  double slope_stderr = 0.0;
};

/// Mean off-diagonal distance over `subset` (all series when empty) for each
/// rolling window of the common time support.
MeanDistanceTrack rolling_mean_distance(const std::vector<TimeSeries>& set, std::size_t window_length, std::size_t step,
                                        Kind kind, const std::vector<std::string>& subset = {},
                                        std::size_t block_length = 2);

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
};

/// One agglomeration step. Leaves are 0..L-1; the k-th merge creates cluster L+k.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct HierarchyResult {
  std::vector<std::string> labels;
  std::vector<Edge> mst_edges;
  std::vector<Merge> linkage;
  Eigen::MatrixXd ultrametric;

  double total_weight() const;
};

/// Kruskal MST over any finite symmetric dissimilarity; equal weights are ordered by the (smaller, larger) label pair.
/// The single-linkage merges follow the accepted edges.
HierarchyResult mst(const DistanceMatrix& matrix);

std::string to_string(Kind k);

}  // namespace econokit::distance
