#pragma once

#include <cmath>
#include <vector>

#include "seedforge/grid.hpp"

namespace seedforge {

struct BilateralParams {
  double sigma_spatial = 3.0;  // voxels
  double sigma_range = 0.1;    // normalized intensity units
  std::size_t radius = 0;      // window half-width; 0 selects ceil(2 * sigma_spatial)

  std::size_t effective_radius() const {
    return radius != 0 ? radius
                       : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * sigma_spatial)));
  }

  void validate() const {
    if (!(sigma_spatial > 0.0) || !std::isfinite(sigma_spatial))
      throw Error(ErrorKind::parameter, "bilateral sigma_spatial must be > 0", "preprocess");
    if (!(sigma_range > 0.0) || !std::isfinite(sigma_range))
      throw Error(ErrorKind::parameter, "bilateral sigma_range must be > 0", "preprocess");
  }

  bool operator==(const BilateralParams&) const = default;
};

namespace detail {

struct WindowOffset {
  std::array<long long, kMaxRank> delta;
  double spatial_weight;
};

inline std::vector<WindowOffset> window_offsets(const Shape& shape, std::size_t radius,
                                                double sigma_spatial) {
  const long long r = static_cast<long long>(radius);
  std::array<long long, kMaxRank> lo{}, hi{};
  for (std::size_t a = 0; a < shape.rank(); ++a) {
    // Degenerate axes carry no window.
    lo[a] = shape.extent(a) > 1 ? -r : 0;
    hi[a] = shape.extent(a) > 1 ? r : 0;
  }
  std::vector<WindowOffset> out;
  std::array<long long, kMaxRank> d{};
  for (std::size_t a = 0; a < shape.rank(); ++a) d[a] = lo[a];
  const double inv = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
  while (true) {
    double dist2 = 0.0;
    for (std::size_t a = 0; a < shape.rank(); ++a) dist2 += static_cast<double>(d[a] * d[a]);
    out.push_back({d, std::exp(-dist2 * inv)});
    std::size_t a = shape.rank();
    while (a-- > 0) {
      if (d[a] < hi[a]) {
        ++d[a];
        break;
      }
      d[a] = lo[a];
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

}  // namespace detail

/// Brute-force bilateral filter. The window is clipped at the grid boundary
/// and the weights renormalized over the voxels that remain.
inline ImageGrid bilateral_filter(const ImageGrid& grid, const BilateralParams& params) {
  params.validate();
  const Shape& shape = grid.shape();
  const auto offsets = detail::window_offsets(shape, params.effective_radius(), params.sigma_spatial);
  const double range_inv = 1.0 / (2.0 * params.sigma_range * params.sigma_range);
  const auto in = grid.values();
  std::vector<double> out(in.size());

  for (std::size_t i = 0; i < in.size(); ++i) {
    const Coord c = shape.coords(i);
    const double center = in[i];
    double acc = 0.0, norm = 0.0;
    for (const auto& off : offsets) {
      std::size_t j = 0;
      bool inside = true;
      for (std::size_t a = 0; a < shape.rank(); ++a) {
        const long long p = static_cast<long long>(c[a]) + off.delta[a];
        if (p < 0 || p >= static_cast<long long>(shape.extent(a))) {
          inside = false;
          break;
        }
        j += static_cast<std::size_t>(p) * shape.stride(a);
      }
      if (!inside) continue;
      const double diff = in[j] - center;
      const double w = off.spatial_weight * std::exp(-diff * diff * range_inv);
      acc += w * in[j];
      norm += w;
    }
    // norm >= 1 because the centre voxel always contributes weight 1.
    out[i] = std::clamp(acc / norm, 0.0, 1.0);
  }
  return grid.with_values(std::move(out));
}

}  // namespace seedforge
