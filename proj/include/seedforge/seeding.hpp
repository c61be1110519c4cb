/* FG seeding strategies.
 *
 * Objects are assumed brighter than their surroundings; callers invert the
 * grid for dark objects.
 */
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/gmm.hpp"
#include "seedforge/otsu.hpp"
#include "seedforge/saliency.hpp"

namespace seedforge {

enum class SeedMethod { otsu, gmm, mbd, ft };

inline std::string_view method_tag(SeedMethod m) {
  switch (m) {
    case SeedMethod::otsu: return "otsu";
    case SeedMethod::gmm: return "gmm";
    case SeedMethod::mbd: return "mbd";
    case SeedMethod::ft: return "ft";
  }
  return "?";
}

struct SeedingParams {
  SeedMethod method = SeedMethod::mbd;
  GmmParams gmm{};
  std::size_t mbd_passes = 3;
  double top_fraction = 0.10;
  std::size_t otsu_bins = 256;

  bool operator==(const SeedingParams&) const = default;
};

struct SeedingReport {
  std::string method;
  std::size_t fg_count = 0;
  std::optional<double> threshold;
  std::optional<std::size_t> gmm_component;
  std::optional<std::size_t> gmm_iterations;
  std::optional<std::size_t> mbd_passes;
  std::optional<std::size_t> candidates;  // saliency top-fraction size
  std::vector<std::string> warnings;
};

struct SeedingResult {
  SeedMask fg;
  SeedingReport report;
  std::optional<SaliencyMap> saliency;
  std::optional<GmmModel> model;
};

inline SeedingResult seed_otsu(const ImageGrid& grid, std::size_t bins = 256) {
  SeedingResult r{SeedMask(grid.shape()), {}, std::nullopt, std::nullopt};
  r.report.method = "otsu";
  try {
    const auto t = otsu_threshold(grid.values(), bins);
    r.report.threshold = t.threshold;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (t.above(grid[i])) r.fg.set(i, Label::fg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate) throw;
    r.report.warnings.emplace_back(e.what());
  }
  r.report.fg_count = r.fg.count(Label::fg);
  return r;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// Chooses the component whose high-density support (PDF above half its
/// peak) has the largest median intensity, then keeps voxels whose density
/// under that component reaches (max + median) / 2 of the density map.
inline SeedingResult seed_gmm(const ImageGrid& grid, const GmmModel& model) {
  SeedingResult r{SeedMask(grid.shape()), {}, std::nullopt, model};
  r.report.method = "gmm";
  r.report.gmm_iterations = model.iterations;
  r.report.warnings = model.warnings;
  const auto I = grid.values();

  std::optional<std::size_t> chosen;
  double chosen_median = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto& c = model.components[k];
    const double cut = 0.5 * c.peak();
    std::vector<double> support;
    for (double x : I)
      if (c.pdf(x) > cut) support.push_back(x);
    if (support.empty()) continue;
    const double med = detail::median_of(std::move(support));
    if (med > chosen_median) {
      chosen_median = med;
      chosen = k;
    }
  }
  if (!chosen)
    throw Error(ErrorKind::seeding, "no GMM component has a non-empty support set", "seeding");
  r.report.gmm_component = *chosen;

  const auto& c = model.components[*chosen];
  std::vector<double> p(I.size());
  for (std::size_t i = 0; i < I.size(); ++i) p[i] = c.pdf(I[i]);
  const double pmax = *std::max_element(p.begin(), p.end());
  const double thr = 0.5 * (pmax + detail::median_of(p));
  r.report.threshold = thr;
  for (std::size_t i = 0; i < I.size(); ++i)
    if (p[i] >= thr) r.fg.set(i, Label::fg);
  r.report.fg_count = r.fg.count(Label::fg);
  return r;
}

/// Seeds from any saliency detector via the top-fraction Otsu rule.
inline SeedingResult seed_from_saliency(const ImageGrid& grid, const SaliencyFunction& detector,
                                        std::string tag, double top_fraction = 0.10,
                                        std::size_t bins = 256) {
  auto sal = detector(grid);
  require_same_shape(sal.shape, grid.shape(), "saliency");
  auto b = binarize_saliency(sal, top_fraction, bins);
  SeedingResult r{std::move(b.fg), {}, std::move(sal), std::nullopt};
  r.report.method = std::move(tag);
  r.report.threshold = b.threshold;
  r.report.candidates = b.candidates;
  r.report.warnings = std::move(b.warnings);
  r.report.fg_count = r.fg.count(Label::fg);
  return r;
}

inline SeedingResult run_seeding(const ImageGrid& grid, const SeedingParams& params) {
  switch (params.method) {
    case SeedMethod::otsu:
      return seed_otsu(grid, params.otsu_bins);
    case SeedMethod::gmm:
      return seed_gmm(grid, fit_gmm(grid, params.gmm));
    case SeedMethod::mbd: {
      auto r = seed_from_saliency(
          grid, [&](const ImageGrid& g) { return saliency_mbd(g, params.mbd_passes); }, "mbd",
          params.top_fraction, params.otsu_bins);
      r.report.mbd_passes = params.mbd_passes;
      return r;
    }
    case SeedMethod::ft:
      return seed_from_saliency(grid, saliency_ft, "ft", params.top_fraction, params.otsu_bins);
  }
  throw Error(ErrorKind::parameter, "unknown seeding method", "seeding");
}

}  // namespace seedforge
