/* Saliency detectors used for FG seeding, plus the shared binarization rule.
 *
 *   minimum_barrier_distance  raster-scan approximation of the minimum
 *                             barrier distance from the volume border.
 *   saliency_ft               |global mean - blurred intensity|.
 *   binarize_saliency         Otsu split inside the top fraction of scores.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "seedforge/grid.hpp"
#include "seedforge/otsu.hpp"

namespace seedforge {

/// Non-negative per-voxel scores normalized by their maximum.
struct SaliencyMap {
  Shape shape;
  std::vector<double> scores;

  static SaliencyMap normalized(Shape shape, std::vector<double> raw) {
    const double m = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
    if (m > 0.0)
      for (double& v : raw) v = std::max(v, 0.0) / m;
    else
      std::fill(raw.begin(), raw.end(), 0.0);
    return {std::move(shape), std::move(raw)};
  }

  bool all_zero() const {
    return std::all_of(scores.begin(), scores.end(), [](double v) { return v == 0.0; });
  }
};

/// A saliency detector; any function of this type can drive FG seeding.
using SaliencyFunction = std::function<SaliencyMap(const ImageGrid&)>;

struct MbdResult {
  std::vector<double> distance;  // raw barrier distance
  std::size_t passes = 0;
};

/// Voxels on a face of any axis with extent > 1.
inline bool is_border_voxel(const Shape& shape, std::size_t i) {
  return !shape.has_full_neighborhood(i);
}

/// Raster-scan minimum barrier distance with the border as seed set.
/// Each pass is a forward raster sweep (odd passes) or inverse raster sweep
/// (even passes) relaxing every voxel through its causal face neighbours.
inline MbdResult minimum_barrier_distance(const ImageGrid& grid, std::size_t passes) {
  if (passes < 1) throw Error(ErrorKind::parameter, "MBD needs at least one pass", "seeding");
  const Shape& shape = grid.shape();
  const auto I = grid.values();
  const std::size_t n = I.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> D(n, inf), U(I.begin(), I.end()), L(I.begin(), I.end());
  for (std::size_t i = 0; i < n; ++i)
    if (is_border_voxel(shape, i)) D[i] = 0.0;

  auto relax = [&](std::size_t v, std::size_t nb) {
    const double u = std::max(U[nb], I[v]);
    const double l = std::min(L[nb], I[v]);
    const double cost = u - l;
    if (cost < D[v]) {
      D[v] = cost;
      U[v] = u;
      L[v] = l;
    }
  };

  for (std::size_t p = 0; p < passes; ++p) {
    const bool forward = p % 2 == 0;
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t v = forward ? step : n - 1 - step;
      for (std::size_t a = 0; a < shape.rank(); ++a) {
        if (shape.extent(a) < 2) continue;
        const std::size_t c = shape.coord(v, a);
        if (forward && c > 0) relax(v, v - shape.stride(a));
        if (!forward && c + 1 < shape.extent(a)) relax(v, v + shape.stride(a));
      }
    }
  }
  return {std::move(D), passes};
}

inline SaliencyMap saliency_mbd(const ImageGrid& grid, std::size_t passes = 3) {
  auto r = minimum_barrier_distance(grid, passes);
  return SaliencyMap::normalized(grid.shape(), std::move(r.distance));
}

/// Separable 5-tap binomial blur (1 4 6 4 1)/16, i.e. a Gaussian with
/// sigma = 1 voxel and radius 2, with mirror (reflect-101) borders.
inline std::vector<double> binomial_blur(const Shape& shape, std::span<const double> in) {
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  auto reflect = [](long long p, long long len) {
    if (len == 1) return 0LL;
    const long long period = 2 * (len - 1);
    p %= period;
    if (p < 0) p += period;
    return p < len ? p : period - p;
  };
  std::vector<double> cur(in.begin(), in.end()), next(in.size());
  for (std::size_t a = 0; a < shape.rank(); ++a) {
    const long long len = static_cast<long long>(shape.extent(a));
    if (len < 2) continue;
    const std::size_t stride = shape.stride(a);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const long long c = static_cast<long long>(shape.coord(i, a));
      const std::size_t base = i - static_cast<std::size_t>(c) * stride;
      double acc = 0.0;
      for (long long t = -2; t <= 2; ++t)
        acc += kTaps[t + 2] * cur[base + static_cast<std::size_t>(reflect(c + t, len)) * stride];
      next[i] = acc;
    }
    std::swap(cur, next);
  }
  return cur;
}

/// Unnormalized frequency-tuned scores. Differences at rounding level are
/// zeroed so that max-normalization cannot blow noise up to 1.
inline std::vector<double> frequency_tuned_scores(const ImageGrid& grid) {
  constexpr double kRoundingFloor = 1e-12;
  const auto I = grid.values();
  const double mean = std::accumulate(I.begin(), I.end(), 0.0) / static_cast<double>(I.size());
  auto blurred = binomial_blur(grid.shape(), I);
  for (double& b : blurred) {
    b = std::abs(mean - b);
    if (b < kRoundingFloor) b = 0.0;
  }
  return blurred;
}

inline SaliencyMap saliency_ft(const ImageGrid& grid) {
  return SaliencyMap::normalized(grid.shape(), frequency_tuned_scores(grid));
}

struct BinarizeResult {
  SeedMask fg;
  std::size_t candidates = 0;       // |Q|
  std::optional<double> threshold;  // Otsu threshold inside Q, if any
  std::vector<std::string> warnings;
};

/// Number of voxels in the top fraction, at least 1.
inline std::size_t top_fraction_count(std::size_t voxels, double fraction) {
  const double raw = fraction * static_cast<double>(voxels);
  auto q = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(q, 1, voxels);
}

/// FG = voxels among the top `fraction` of scores that Otsu puts in the upper
/// class of that subset. Equal scores are ordered by voxel index.
inline BinarizeResult binarize_saliency(const SaliencyMap& sal, double fraction = 0.10,
                                        std::size_t bins = 256) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorKind::parameter, "top fraction must lie in (0,1]", "seeding");
  BinarizeResult r{SeedMask(sal.shape), 0, std::nullopt, {}};
  if (sal.all_zero()) {
    r.warnings.push_back("saliency map is identically zero; no FG seeds");
    return r;
  }
  const std::size_t n = sal.scores.size();
  const std::size_t q = top_fraction_count(n, fraction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sal.scores[a] != sal.scores[b]) return sal.scores[a] > sal.scores[b];
                      return a < b;
                    });
  order.resize(q);
  r.candidates = q;
  std::vector<double> qs(q);
  for (std::size_t k = 0; k < q; ++k) qs[k] = sal.scores[order[k]];

  const auto [lo, hi] = std::minmax_element(qs.begin(), qs.end());
  if (!(*hi > *lo)) {
    r.warnings.push_back("degenerate histogram in top saliency scores; all candidates kept");
    for (auto i : order) r.fg.set(i, Label::fg);
    return r;
  }
  const auto t = otsu_threshold(qs, bins);
  r.threshold = t.threshold;
  for (auto i : order)
    if (t.above(sal.scores[i])) r.fg.set(i, Label::fg);
  return r;
}

}  // namespace seedforge
