#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "econokit/series.hpp"

namespace econokit::zipf {

/// Letter sets: 2 -> {u, d}; 3 -> {u, s, d}; 5 -> {u, p, s, n, d}.
/// Thresholds are in return units: none for size 2, {s} for size 3 and
/// {inner, outer} for size 5 (p and n are the up-small and down-small bands).
struct Alphabet {
  int size = 2;
  std::vector<double> thresholds;

  static Alphabet two_letter() { return {2, {}}; }
  static Alphabet three_letter(double small) { return {3, {small}}; }
  static Alphabet five_letter(double inner, double outer) { return {5, {inner, outer}}; }

  /// Equal-mass thresholds taken from empirical quantiles of |returns|.
  static Alphabet from_quantiles(int size, const Eigen::Ref<const Eigen::VectorXd>& returns);

  std::string letters() const;
  void validate() const;
};

/// Maps each return to one letter.
std::string encode(const Eigen::Ref<const Eigen::VectorXd>& returns, const Alphabet& alphabet);
inline std::string encode(const ReturnSeries& r, const Alphabet& alphabet) { return encode(r.values, alphabet); }

class WordTable {
 public:
  WordTable(std::size_t word_length, bool overlapping, std::map<std::string, std::uint64_t> counts);

  std::size_t word_length() const { return word_length_; }
  bool overlapping() const { return overlapping_; }
  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t count(const std::string& word) const;
  double probability(const std::string& word) const;
  std::map<std::string, double> probabilities() const;
  /// Stable FNV-1a digest of (length, overlap, counts).
  std::uint64_t fingerprint() const;

 private:
  std::size_t word_length_;
  bool overlapping_;
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

WordTable count_words(const std::string& letters, std::size_t word_length, bool overlapping = true);

struct RankedWord {
  std::size_t rank = 0;
  std::string word;
  std::uint64_t count = 0;
};

/// Count-descending; equal counts ordered lexicographically by word.
std::vector<RankedWord> rank_frequency(const WordTable& table);

struct ZipfOptions {
  bool exclude_hapax = true;
  std::size_t rank_min = 1;
  std::optional<std::size_t> rank_max;
};

struct ZipfFit {
  double zeta = 0.0;
  double stderr = 0.0;
  double r_squared = 0.0;
  std::size_t rank_min = 0;
  std::size_t rank_max = 0;
};

/// zeta = -slope of log N_r on log r.
ZipfFit fit_zipf(const std::vector<RankedWord>& ranked, const ZipfOptions& options = {});
/// Same fit on a raw count-per-rank vector (index 0 is rank 1).
ZipfFit fit_zipf(const std::vector<double>& counts_by_rank, const ZipfOptions& options = {});

struct ParetoFit {
  double lambda = 0.0;
  double stderr = 0.0;
  double r_squared = 0.0;
  double tail_fraction = 0.5;
  std::size_t points = 0;
};

/// lambda from log P[freq > f] on log f over the top tail_fraction of the
/// distinct frequency values.
ParetoFit fit_pareto(const std::vector<double>& frequencies, double tail_fraction = 0.5);

/// (1 / lambda) + zeta - 2.
double exponent_relation_residual(double zeta, double lambda);

}  // namespace econokit::zipf
