/* Pipeline configuration and orchestration.
 *
 * A configuration is written as a comma-separated stage list, e.g.
 * "P,Sm,W,Me,gc":
 *
 *   P            bilateral pre-filter (omitted: off)
 *   So Sg Sm St  FG seeding by Otsu, GMM, minimum barrier, frequency tuned
 *                (omitted: Sm)
 *   W            Gaussian seed weighting (omitted: off)
 *   Mo Me        FG opening or erosion (omitted: none)
 *   gc rw        GrowCut or Random Walker (required)
 *
 * Numeric parameters are given as flag overrides (name -> value), using the
 * CLI flag names without leading dashes.
 */
#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seedforge/bilateral.hpp"
#include "seedforge/refine.hpp"
#include "seedforge/seeding.hpp"
#include "seedforge/segmenters.hpp"

namespace seedforge {

enum class SegmenterKind { growcut, random_walker };

struct PipelineConfig {
  bool preprocess = false;
  BilateralParams bilateral{};
  SeedingParams seeding{};
  bool weighting = false;
  WeightParams weight{};
  MorphParams morph{};
  SegmenterKind segmenter = SegmenterKind::growcut;
  SolverParams solver{};
  std::size_t border_thickness = 1;
  bool invert = false;
  bool reweigh_after_morph = false;

  bool operator==(const PipelineConfig&) const = default;
};

using FlagOverrides = std::map<std::string, std::string>;

/// Canonical stage string: P,S?,W,M?,seg in that order.
inline std::string to_pipeline_string(const PipelineConfig& c) {
  std::vector<std::string> t;
  if (c.preprocess) t.emplace_back("P");
  switch (c.seeding.method) {
    case SeedMethod::otsu: t.emplace_back("So"); break;
    case SeedMethod::gmm: t.emplace_back("Sg"); break;
    case SeedMethod::mbd: t.emplace_back("Sm"); break;
    case SeedMethod::ft: t.emplace_back("St"); break;
  }
  if (c.weighting) t.emplace_back("W");
  if (c.morph.variant == MorphVariant::opening) t.emplace_back("Mo");
  if (c.morph.variant == MorphVariant::erosion) t.emplace_back("Me");
  t.emplace_back(c.segmenter == SegmenterKind::growcut ? "gc" : "rw");
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + t[i];
  return s;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(d))
    throw Error(ErrorKind::parse, "flag --" + key + ": expected a number, got '" + v + "'");
  return d;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorKind::parse, "flag --" + key + ": expected a non-negative integer, got '" + v + "'");
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse, "flag --" + key + ": integer out of range");
  }
}

inline bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v.empty()) return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw Error(ErrorKind::parse, "flag --" + key + ": expected on/off, got '" + v + "'");
}

inline std::string format_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace detail

inline void apply_override(PipelineConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "bilateral-sigma-spatial") c.bilateral.sigma_spatial = parse_double(key, v);
  else if (key == "bilateral-sigma-range") c.bilateral.sigma_range = parse_double(key, v);
  else if (key == "bilateral-radius") c.bilateral.radius = parse_count(key, v);
  else if (key == "no-preprocess") c.preprocess = !parse_switch(key, v);
  else if (key == "preprocess") c.preprocess = parse_switch(key, v);
  else if (key == "seed-method") {
    if (v == "otsu") c.seeding.method = SeedMethod::otsu;
    else if (v == "gmm") c.seeding.method = SeedMethod::gmm;
    else if (v == "mbd") c.seeding.method = SeedMethod::mbd;
    else if (v == "ft") c.seeding.method = SeedMethod::ft;
    else throw Error(ErrorKind::parse, "flag --seed-method: unknown method '" + v + "'");
  }
  else if (key == "gmm-k") c.seeding.gmm.components = parse_count(key, v);
  else if (key == "gmm-max-iter") c.seeding.gmm.max_iterations = parse_count(key, v);
  else if (key == "gmm-tol") c.seeding.gmm.tolerance = parse_double(key, v);
  else if (key == "mbd-passes") c.seeding.mbd_passes = parse_count(key, v);
  else if (key == "top-fraction") c.seeding.top_fraction = parse_double(key, v);
  else if (key == "weighting") c.weighting = parse_switch(key, v);
  else if (key == "sigma-factor") c.weight.sigma_factor = parse_double(key, v);
  else if (key == "bg-weight") c.weight.bg_weight = parse_double(key, v);
  else if (key == "morph") {
    if (v == "open") c.morph.variant = MorphVariant::opening;
    else if (v == "erode") c.morph.variant = MorphVariant::erosion;
    else if (v == "none") c.morph.variant = MorphVariant::none;
    else throw Error(ErrorKind::parse, "flag --morph: unknown variant '" + v + "'");
  }
  else if (key == "morph-iters") c.morph.iterations = parse_count(key, v);
  else if (key == "reweigh-after-morph") c.reweigh_after_morph = parse_switch(key, v);
  else if (key == "segmenter") {
    if (v == "gc") c.segmenter = SegmenterKind::growcut;
    else if (v == "rw") c.segmenter = SegmenterKind::random_walker;
    else throw Error(ErrorKind::parse, "flag --segmenter: unknown segmenter '" + v + "'");
  }
  else if (key == "rw-beta") c.solver.rw_beta = parse_double(key, v);
  else if (key == "rw-tol") c.solver.cg_tolerance = parse_double(key, v);
  else if (key == "rw-max-iter") c.solver.cg_max_iterations = parse_count(key, v);
  else if (key == "gc-max-sweeps") c.solver.gc_max_sweeps = parse_count(key, v);
  else if (key == "border-thickness") c.border_thickness = parse_count(key, v);
  else if (key == "invert") c.invert = parse_switch(key, v);
  else throw Error(ErrorKind::parse, "unknown flag --" + key);
}

/// Range checks that do not depend on the image, so a bad value is rejected
/// even when its stage is switched off.
inline void validate_config(const PipelineConfig& c) {
  c.bilateral.validate();
  c.weight.validate();
  c.solver.validate();
  const auto& g = c.seeding.gmm;
  if (g.components < 2) throw Error(ErrorKind::parameter, "GMM needs K >= 2", "seeding");
  if (!(g.tolerance > 0.0)) throw Error(ErrorKind::parameter, "GMM tolerance must be > 0", "seeding");
  if (c.seeding.mbd_passes < 1)
    throw Error(ErrorKind::parameter, "MBD needs at least one pass", "seeding");
  if (!(c.seeding.top_fraction > 0.0 && c.seeding.top_fraction <= 1.0))
    throw Error(ErrorKind::parameter, "top fraction must lie in (0,1]", "seeding");
  if (c.morph.iterations < 1)
    throw Error(ErrorKind::parameter, "morphology iterations must be >= 1", "morphology");
  if (c.border_thickness < 1)
    throw Error(ErrorKind::parameter, "border thickness must be >= 1", "merge");
}

/// Parses a stage string, then applies `overrides` in key order.
inline PipelineConfig parse_config(std::string_view text, const FlagOverrides& overrides = {}) {
  PipelineConfig c;
  bool seen_p = false, seen_s = false, seen_w = false, seen_m = false, seen_seg = false;
  auto dup = [](bool& seen, const std::string& tok, std::size_t pos) {
    if (seen)
      throw Error(ErrorKind::parse, "duplicate stage at token " + std::to_string(pos) + " \"" + tok + "\"");
    seen = true;
  };
  std::size_t pos = 0, start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string tok = detail::trim(text.substr(start, end - start));
    ++pos;
    if (tok.empty()) {
      if (!(text.empty() && pos == 1))
        throw Error(ErrorKind::parse, "empty token at position " + std::to_string(pos));
    } else if (tok == "P") {
      dup(seen_p, tok, pos);
      c.preprocess = true;
    } else if (tok == "So" || tok == "Sg" || tok == "Sm" || tok == "St") {
      dup(seen_s, tok, pos);
      c.seeding.method = tok == "So" ? SeedMethod::otsu
                         : tok == "Sg" ? SeedMethod::gmm
                         : tok == "Sm" ? SeedMethod::mbd
                                       : SeedMethod::ft;
    } else if (tok == "W") {
      dup(seen_w, tok, pos);
      c.weighting = true;
    } else if (tok == "Mo" || tok == "Me") {
      dup(seen_m, tok, pos);
      c.morph.variant = tok == "Mo" ? MorphVariant::opening : MorphVariant::erosion;
    } else if (tok == "gc" || tok == "rw") {
      dup(seen_seg, tok, pos);
      c.segmenter = tok == "gc" ? SegmenterKind::growcut : SegmenterKind::random_walker;
    } else {
      throw Error(ErrorKind::parse,
                  "unknown token \"" + tok + "\" at position " + std::to_string(pos));
    }
    start = end + 1;
  }
  if (!seen_seg) throw Error(ErrorKind::parse, "missing segmenter (gc or rw)");
  for (const auto& [k, v] : overrides) apply_override(c, k, v);
  validate_config(c);
  return c;
}

/// Flag overrides that turn the canonical stage string of `c` back into `c`.
inline FlagOverrides config_overrides(const PipelineConfig& c) {
  const PipelineConfig base = parse_config(to_pipeline_string(c));
  FlagOverrides o;
  using detail::format_double;
  if (c.bilateral.sigma_spatial != base.bilateral.sigma_spatial)
    o["bilateral-sigma-spatial"] = format_double(c.bilateral.sigma_spatial);
  if (c.bilateral.sigma_range != base.bilateral.sigma_range)
    o["bilateral-sigma-range"] = format_double(c.bilateral.sigma_range);
  if (c.bilateral.radius != base.bilateral.radius)
    o["bilateral-radius"] = std::to_string(c.bilateral.radius);
  if (c.seeding.gmm.components != base.seeding.gmm.components)
    o["gmm-k"] = std::to_string(c.seeding.gmm.components);
  if (c.seeding.gmm.max_iterations != base.seeding.gmm.max_iterations)
    o["gmm-max-iter"] = std::to_string(c.seeding.gmm.max_iterations);
  if (c.seeding.gmm.tolerance != base.seeding.gmm.tolerance)
    o["gmm-tol"] = format_double(c.seeding.gmm.tolerance);
  if (c.seeding.mbd_passes != base.seeding.mbd_passes)
    o["mbd-passes"] = std::to_string(c.seeding.mbd_passes);
  if (c.seeding.top_fraction != base.seeding.top_fraction)
    o["top-fraction"] = format_double(c.seeding.top_fraction);
  if (c.seeding.otsu_bins != base.seeding.otsu_bins)
    throw Error(ErrorKind::parameter, "otsu bin count is not configurable from flags");
  if (c.weight.sigma_factor != base.weight.sigma_factor)
    o["sigma-factor"] = format_double(c.weight.sigma_factor);
  if (c.weight.bg_weight != base.weight.bg_weight)
    o["bg-weight"] = format_double(c.weight.bg_weight);
  if (c.morph.iterations != base.morph.iterations)
    o["morph-iters"] = std::to_string(c.morph.iterations);
  if (c.reweigh_after_morph != base.reweigh_after_morph)
    o["reweigh-after-morph"] = c.reweigh_after_morph ? "on" : "off";
  if (c.solver.rw_beta != base.solver.rw_beta) o["rw-beta"] = format_double(c.solver.rw_beta);
  if (c.solver.cg_tolerance != base.solver.cg_tolerance)
    o["rw-tol"] = format_double(c.solver.cg_tolerance);
  if (c.solver.cg_max_iterations != base.solver.cg_max_iterations)
    o["rw-max-iter"] = std::to_string(c.solver.cg_max_iterations);
  if (c.solver.gc_max_sweeps != base.solver.gc_max_sweeps)
    o["gc-max-sweeps"] = std::to_string(c.solver.gc_max_sweeps);
  if (c.border_thickness != base.border_thickness)
    o["border-thickness"] = std::to_string(c.border_thickness);
  if (c.invert != base.invert) o["invert"] = c.invert ? "on" : "off";
  return o;
}

struct StageTimings {
  double preprocess_ms = 0, seeding_ms = 0, weighting_ms = 0, morphology_ms = 0,
         segmentation_ms = 0;
};

struct SegmentationOutcome {
  ImageGrid features;  // grid seen by the seeder and segmenter (after invert and P)
  SeedMask auto_fg;    // FG seeds after S, W and M, before merging with the border
  SeedMask seeds;      // merged seed mask fed to the segmenter
  StrengthMap strengths;
  LabelMap labels;
  SeedingReport report;
  std::optional<SaliencyMap> saliency;
  SegmenterDiagnostics solver;
  std::size_t merge_conflicts = 0;
  StageTimings timings;
  std::vector<std::string> warnings;
};

namespace detail {

class StageClock {
 public:
  StageClock() : t0_(std::chrono::steady_clock::now()) {}
  double lap_ms() {
    const auto t = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t - t0_).count();
    t0_ = t;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SolverError&) {
    throw;
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace detail

/// Runs the configured segmenter on prepared features and seeds.
inline SegmentationResult run_segmenter(const PipelineConfig& config, const ImageGrid& features,
                                        const SeedMask& seeds, const StrengthMap& strengths) {
  return detail::run_stage("segmentation", [&] {
    return config.segmenter == SegmenterKind::growcut
               ? growcut(features, seeds, strengths, config.solver)
               : random_walker(features, seeds, config.solver);
  });
}

/// invert? -> P -> S -> W -> M -> merge with border BG -> segmenter.
inline SegmentationOutcome segment(const PipelineConfig& config, const ImageGrid& input) {
  SegmentationOutcome out;
  detail::StageClock clock;

  out.features = detail::run_stage("preprocess", [&] {
    ImageGrid g = config.invert ? input.inverted() : input;
    return config.preprocess ? bilateral_filter(g, config.bilateral) : g;
  });
  out.timings.preprocess_ms = clock.lap_ms();

  auto seeded = detail::run_stage("seeding", [&] { return run_seeding(out.features, config.seeding); });
  out.report = seeded.report;
  out.saliency = std::move(seeded.saliency);
  for (const auto& w : out.report.warnings) out.warnings.push_back("seeding: " + w);
  if (seeded.fg.count(Label::fg) == 0) {
    std::string why = out.report.warnings.empty() ? "no FG seeds produced" : out.report.warnings.front();
    throw Error(ErrorKind::seeding, "empty seed set after seeding: " + why, "seeding");
  }
  out.timings.seeding_ms = clock.lap_ms();

  std::optional<StrengthMap> weights;
  if (config.weighting)
    weights = detail::run_stage("weighting", [&] { return weight_seeds(seeded.fg, config.weight); });
  out.timings.weighting_ms = clock.lap_ms();

  out.auto_fg = detail::run_stage("morphology", [&] { return morph_fg(seeded.fg, config.morph); });
  if (out.auto_fg.count(Label::fg) == 0)
    throw Error(ErrorKind::seeding, "empty seed set after morphology", "morphology");
  if (config.weighting && config.reweigh_after_morph)
    weights = detail::run_stage("weighting", [&] { return weight_seeds(out.auto_fg, config.weight); });
  out.timings.morphology_ms = clock.lap_ms();

  auto merged = detail::run_stage("merge", [&] {
    return merge_seeds(out.auto_fg, mask_border(input.shape(), config.border_thickness));
  });
  out.seeds = std::move(merged.mask);
  out.merge_conflicts = merged.conflicts;
  if (out.seeds.count(Label::fg) == 0)
    throw Error(ErrorKind::seeding, "empty seed set after merging with border seeds", "merge");

  out.strengths = StrengthMap(input.shape());
  for (std::size_t i = 0; i < out.seeds.size(); ++i) {
    if (out.seeds[i] == Label::bg)
      out.strengths.set(i, config.weighting ? config.weight.bg_weight : 1.0);
    else if (out.seeds[i] == Label::fg)
      out.strengths.set(i, weights ? (*weights)[i] : 1.0);
  }

  clock.lap_ms();
  auto seg = run_segmenter(config, out.features, out.seeds, out.strengths);
  out.timings.segmentation_ms = clock.lap_ms();
  out.labels = std::move(seg.labels);
  out.solver = std::move(seg.diagnostics);
  for (const auto& w : out.solver.warnings) out.warnings.push_back("segmentation: " + w);
  return out;
}

}  // namespace seedforge
