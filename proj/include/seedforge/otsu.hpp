/* Otsu threshold over a histogram spanning [min, max] of the samples.
 *
 * Between-class variance is evaluated on integer bin indices, so every
 * candidate's score is a deterministic function of integer counts. Among
 * candidates with equal score the lowest partition wins. Several adjacent
 * bin edges produce the same partition when the bins between them are
 * empty; in that case the middle edge of the run is reported, which puts
 * the threshold value in the middle of the gap.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "seedforge/error.hpp"

namespace seedforge {

struct OtsuThreshold {
  double threshold = 0.0;  // bin-edge value; samples in bins >= `bin` are the upper class
  std::size_t bin = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t bins = 256;

  std::size_t bin_of(double v) const {
    if (!(hi > lo)) return 0;
    const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(t > 0.0)) return 0;
    return std::min(bins - 1, static_cast<std::size_t>(t));
  }

  bool above(double v) const { return bin_of(v) >= bin; }
};

/// Score used to rank candidate splits, proportional to between-class variance.
inline double otsu_between_class_score(std::int64_t n0, std::int64_t sum0, std::int64_t n1,
                                       std::int64_t sum1) {
  const double d = static_cast<double>(n0 * sum1 - n1 * sum0);
  return d * d / (static_cast<double>(n0) * static_cast<double>(n1));
}

inline OtsuThreshold otsu_threshold(std::span<const double> values, std::size_t bins = 256) {
  if (bins < 2) throw Error(ErrorKind::parameter, "otsu needs at least 2 bins");
  if (values.empty()) throw Error(ErrorKind::degenerate, "degenerate histogram: no samples");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  OtsuThreshold r;
  r.lo = *lo_it;
  r.hi = *hi_it;
  r.bins = bins;
  if (!(r.hi > r.lo))
    throw Error(ErrorKind::degenerate, "degenerate histogram: all samples identical");

  std::vector<std::int64_t> hist(bins, 0);
  for (double v : values) ++hist[r.bin_of(v)];

  std::int64_t total_n = 0, total_s = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    total_n += hist[b];
    total_s += hist[b] * static_cast<std::int64_t>(b);
  }

  std::int64_t n0 = 0, s0 = 0;
  double best = -1.0;
  std::size_t best_first = 0, best_last = 0;
  bool extending = false;  // whether the current best run may still grow
  for (std::size_t k = 1; k < bins; ++k) {
    n0 += hist[k - 1];
    s0 += hist[k - 1] * static_cast<std::int64_t>(k - 1);
    const std::int64_t n1 = total_n - n0;
    if (n0 == 0 || n1 == 0) {
      extending = false;
      continue;
    }
    if (extending && hist[k - 1] == 0) {
      best_last = k;  // same partition as edge k-1
      continue;
    }
    extending = false;
    const double score = otsu_between_class_score(n0, s0, n1, total_s - s0);
    if (score > best) {
      best = score;
      best_first = best_last = k;
      extending = true;
    }
  }
  r.bin = best_first + (best_last - best_first) / 2;
  r.threshold = r.lo + (r.hi - r.lo) * static_cast<double>(r.bin) / static_cast<double>(bins);
  return r;
}

}  // namespace seedforge
