#pragma once

#include <cmath>
#include <vector>

#include "seedforge/grid.hpp"

namespace seedforge {

struct WeightParams {
  double sigma_factor = 0.5;  // sigma = factor * FG bounding-box diagonal
  double bg_weight = 1.0;

  void validate() const {
    if (!(sigma_factor > 0.0) || !std::isfinite(sigma_factor))
      throw Error(ErrorKind::parameter, "sigma_factor must be > 0", "weighting");
    if (!(bg_weight >= 0.0 && bg_weight <= 1.0))
      throw Error(ErrorKind::parameter, "bg_weight must lie in [0,1]", "weighting");
  }
  bool operator==(const WeightParams&) const = default;
};

/// Gaussian weights on FG seeds centred at the FG centroid; BG seeds get
/// `bg_weight`, unlabeled voxels 0.
inline StrengthMap weight_seeds(const SeedMask& mask, const WeightParams& params = {}) {
  params.validate();
  const Shape& shape = mask.shape();
  const std::size_t rank = shape.rank();
  std::array<double, kMaxRank> centroid{};
  std::array<std::size_t, kMaxRank> lo, hi{};
  lo.fill(SIZE_MAX);
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != Label::fg) continue;
    ++count;
    for (std::size_t a = 0; a < rank; ++a) {
      const std::size_t c = shape.coord(i, a);
      centroid[a] += static_cast<double>(c);
      lo[a] = std::min(lo[a], c);
      hi[a] = std::max(hi[a], c);
    }
  }
  if (count == 0)
    throw Error(ErrorKind::seeding, "cannot weight an empty FG seed set", "weighting");
  double diag2 = 0.0;
  for (std::size_t a = 0; a < rank; ++a) {
    centroid[a] /= static_cast<double>(count);
    const double ext = static_cast<double>(hi[a] - lo[a]);
    diag2 += ext * ext;
  }
  const double sigma = params.sigma_factor * std::sqrt(diag2);

  StrengthMap out(shape);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == Label::bg) {
      out.set(i, params.bg_weight);
    } else if (mask[i] == Label::fg) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < rank; ++a) {
        const double d = static_cast<double>(shape.coord(i, a)) - centroid[a];
        d2 += d * d;
      }
      out.set(i, sigma > 0.0 ? std::exp(-d2 / (2.0 * sigma * sigma)) : (d2 == 0.0 ? 1.0 : 0.0));
    }
  }
  return out;
}

enum class MorphVariant { none, opening, erosion };

struct MorphParams {
  MorphVariant variant = MorphVariant::none;
  std::size_t iterations = 1;

  bool operator==(const MorphParams&) const = default;
};

namespace detail {

// Structuring element: the face-adjacency cross.
inline std::vector<std::uint8_t> erode(const Shape& shape, const std::vector<std::uint8_t>& in) {
  std::vector<std::uint8_t> out(in.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i] || !shape.has_full_neighborhood(i)) continue;
    bool keep = true;
    shape.for_each_neighbor(i, [&](std::size_t j) { keep = keep && in[j]; });
    out[i] = keep;
  }
  return out;
}

inline std::vector<std::uint8_t> dilate(const Shape& shape, const std::vector<std::uint8_t>& in) {
  std::vector<std::uint8_t> out(in);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i]) continue;
    shape.for_each_neighbor(i, [&](std::size_t j) { out[j] = 1; });
  }
  return out;
}

}  // namespace detail

/// Binary erosion or opening of the FG set. BG voxels are never changed;
/// removed FG voxels become unlabeled.
inline SeedMask morph_fg(const SeedMask& mask, const MorphParams& params = {}) {
  if (params.variant == MorphVariant::none) return mask;
  if (params.iterations < 1)
    throw Error(ErrorKind::parameter, "morphology iterations must be >= 1", "morphology");
  const Shape& shape = mask.shape();
  std::vector<std::uint8_t> fg(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) fg[i] = mask[i] == Label::fg;

  for (std::size_t k = 0; k < params.iterations; ++k) fg = detail::erode(shape, fg);
  if (params.variant == MorphVariant::opening)
    for (std::size_t k = 0; k < params.iterations; ++k) fg = detail::dilate(shape, fg);

  SeedMask out(shape);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == Label::bg)
      out.set(i, Label::bg);
    else if (fg[i])
      out.set(i, Label::fg);
  }
  return out;
}

}  // namespace seedforge
