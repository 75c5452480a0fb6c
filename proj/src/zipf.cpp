#include "econokit/zipf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "econokit/error.hpp"
#include "econokit/stats.hpp"

namespace econokit::zipf {
namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Alphabet Alphabet::from_quantiles(int size, const Eigen::Ref<const Eigen::VectorXd>& returns) {
  if (size == 2) return two_letter();
  if (returns.size() == 0) throw Error("alphabet: cannot derive thresholds from an empty return series");
  std::vector<double> mag(static_cast<std::size_t>(returns.size()));
  for (Eigen::Index i = 0; i < returns.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(returns[i]);
  if (size == 3) return three_letter(quantile(mag, 1.0 / 3.0));
  if (size == 5) {
    // s holds the smallest 20% of |r|; p/n the next 40%; u/d the largest 40%.
    const double inner = quantile(mag, 0.2);
    double outer = quantile(mag, 0.6);
    if (!(outer > inner)) outer = std::nextafter(inner, std::numeric_limits<double>::infinity());
    return five_letter(inner, outer);
  }
  throw Error("alphabet size must be 2, 3 or 5");
}

std::string Alphabet::letters() const {
  switch (size) {
    case 2: return "ud";
    case 3: return "usd";
    case 5: return "upsnd";
    default: throw Error("alphabet size must be 2, 3 or 5");
  }
}

void Alphabet::validate() const {
  const std::size_t expected = size == 2 ? 0 : size == 3 ? 1 : size == 5 ? 2 : 99;
  if (expected == 99) throw Error("alphabet size must be 2, 3 or 5");
  if (thresholds.size() != expected)
    throw Error("alphabet of size " + std::to_string(size) + " needs " + std::to_string(expected) + " threshold(s)");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0) || !std::isfinite(thresholds[i])) throw Error("alphabet thresholds must be non-negative");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw Error("alphabet thresholds must be strictly increasing");
  }
}

std::string encode(const Eigen::Ref<const Eigen::VectorXd>& returns, const Alphabet& alphabet) {
  alphabet.validate();
  std::string out(static_cast<std::size_t>(returns.size()), '?');
  for (Eigen::Index i = 0; i < returns.size(); ++i) {
    const double r = returns[i];
    char c = 'd';
    switch (alphabet.size) {
      case 2:
        c = r > 0.0 ? 'u' : 'd';  // zero ties to d
        break;
      case 3: {
        const double s = alphabet.thresholds[0];
        c = std::abs(r) <= s ? 's' : (r > 0.0 ? 'u' : 'd');
        break;
      }
      case 5: {
        const double inner = alphabet.thresholds[0];
        const double outer = alphabet.thresholds[1];
        if (std::abs(r) <= inner) c = 's';
        else if (r > 0.0) c = r > outer ? 'u' : 'p';
        else c = -r > outer ? 'd' : 'n';
        break;
      }
    }
    out[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

WordTable::WordTable(std::size_t word_length, bool overlapping, std::map<std::string, std::uint64_t> counts)
    : word_length_(word_length), overlapping_(overlapping), counts_(std::move(counts)) {
  if (word_length_ == 0) throw Error("word length must be positive");
  for (const auto& [w, c] : counts_) {
    if (w.size() != word_length_) throw Error("word '" + w + "' has the wrong length");
    total_ += c;
  }
}

std::uint64_t WordTable::count(const std::string& word) const {
  auto it = counts_.find(word);
  return it == counts_.end() ? 0 : it->second;
}

double WordTable::probability(const std::string& word) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(word)) / static_cast<double>(total_);
}

std::map<std::string, double> WordTable::probabilities() const {
  std::map<std::string, double> p;
  for (const auto& [w, c] : counts_) p[w] = static_cast<double>(c) / static_cast<double>(total_);
  return p;
}

std::uint64_t WordTable::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t header[2] = {word_length_, overlapping_ ? 1ULL : 0ULL};
  mix(header, sizeof header);
  for (const auto& [w, c] : counts_) {
    mix(w.data(), w.size());
    mix(&c, sizeof c);
  }
  return h;
}

WordTable count_words(const std::string& letters, std::size_t word_length, bool overlapping) {
  if (word_length == 0) throw Error("word length must be positive");
  if (word_length > letters.size())
    throw Error("word length " + std::to_string(word_length) + " exceeds sequence length " +
                std::to_string(letters.size()));
  std::map<std::string, std::uint64_t> counts;
  const std::size_t stride = overlapping ? 1 : word_length;
  for (std::size_t i = 0; i + word_length <= letters.size(); i += stride) ++counts[letters.substr(i, word_length)];
  return WordTable(word_length, overlapping, std::move(counts));
}

std::vector<RankedWord> rank_frequency(const WordTable& table) {
  if (table.counts().empty()) throw Error("rank_frequency: empty table");
  std::vector<RankedWord> ranked;
  ranked.reserve(table.counts().size());
  for (const auto& [w, c] : table.counts()) ranked.push_back({0, w, c});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedWord& a, const RankedWord& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
  return ranked;
}

ZipfFit fit_zipf(const std::vector<double>& counts_by_rank, const ZipfOptions& options) {
  const std::size_t last = std::min(counts_by_rank.size(), options.rank_max.value_or(counts_by_rank.size()));
  std::vector<double> lr;
  std::vector<double> lc;
  std::vector<std::size_t> used;
  for (std::size_t r = std::max<std::size_t>(options.rank_min, 1); r <= last; ++r) {
    const double c = counts_by_rank[r - 1];
    if (options.exclude_hapax && c < 2.0) continue;
    if (!(c > 0.0)) throw Error("fit_zipf: zero count at rank " + std::to_string(r));
    used.push_back(r);
    lr.push_back(std::log(static_cast<double>(r)));
    lc.push_back(std::log(c));
  }
  if (lr.size() < 5) throw Error("fit_zipf: need at least 5 ranks in the fit range");
  const auto fit = fit_line(Eigen::Map<const Eigen::VectorXd>(lr.data(), static_cast<Eigen::Index>(lr.size())),
                            Eigen::Map<const Eigen::VectorXd>(lc.data(), static_cast<Eigen::Index>(lc.size())));
  ZipfFit z;
  z.zeta = -fit.slope;
  z.stderr = fit.slope_stderr;
  z.r_squared = fit.r_squared;
  z.rank_min = used.front();
  z.rank_max = used.back();
  return z;
}

ZipfFit fit_zipf(const std::vector<RankedWord>& ranked, const ZipfOptions& options) {
  std::vector<double> counts(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].rank != i + 1) throw Error("fit_zipf: ranks must be 1..R in order");
    counts[i] = static_cast<double>(ranked[i].count);
  }
  return fit_zipf(counts, options);
}

ParetoFit fit_pareto(const std::vector<double>& frequencies, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw Error("fit_pareto: tail fraction must be in (0, 1]");
  std::vector<double> sorted = frequencies;
  for (double f : sorted)
    if (!(f > 0.0) || !std::isfinite(f)) throw Error("fit_pareto: frequencies must be positive and finite");
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(distinct));
  if (distinct.size() == 1) throw Error("fit_pareto: degenerate input (all frequencies equal)");
  if (distinct.size() < 10) throw Error("fit_pareto: need at least 10 distinct frequency values");

  const auto total = static_cast<double>(sorted.size());
  const auto take = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(distinct.size())));
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = distinct.size() - take; k < distinct.size(); ++k) {
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), distinct[k]));
    if (above == 0.0) continue;  // the largest value has an empty tail
    lx.push_back(std::log(distinct[k]));
    ly.push_back(std::log(above / total));
  }
  if (lx.size() < 3) throw Error("fit_pareto: tail too small");
  const auto fit = fit_line(Eigen::Map<const Eigen::VectorXd>(lx.data(), static_cast<Eigen::Index>(lx.size())),
                            Eigen::Map<const Eigen::VectorXd>(ly.data(), static_cast<Eigen::Index>(ly.size())));
  ParetoFit p;
  p.lambda = -fit.slope;
  p.stderr = fit.slope_stderr;
  p.r_squared = fit.r_squared;
  p.tail_fraction = tail_fraction;
  p.points = lx.size();
  if (!(p.lambda > 0.0)) throw Error("fit_pareto: fitted tail exponent is not positive");
  return p;
}

double exponent_relation_residual(double zeta, double lambda) {
  if (!(lambda > 0.0)) throw Error("exponent relation requires lambda > 0");
  return 1.0 / lambda + zeta - 2.0;
}

}  // namespace econokit::zipf
