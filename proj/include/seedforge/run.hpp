#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include "seedforge/eval.hpp"
#include "seedforge/io.hpp"
#include "seedforge/pipeline.hpp"

namespace seedforge {

inline constexpr int kManifestSchema = 1;

enum class ExitCode : int {
  ok = 0,
  internal = 1,
  parse = 2,
  io = 3,
  seeding = 4,
  solver = 5,
};

inline ExitCode exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::parse:
    case ErrorKind::parameter: return ExitCode::parse;
    case ErrorKind::io:
    case ErrorKind::ingestion: return ExitCode::io;
    case ErrorKind::degenerate:
    case ErrorKind::seeding:
    case ErrorKind::dimension: return ExitCode::seeding;
    case ErrorKind::solver: return ExitCode::solver;
  }
  return ExitCode::internal;
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json flags = nlohmann::json::object();
  for (const auto& [k, v] : config_overrides(c)) flags[k] = v;
  return {
      {"pipeline", to_pipeline_string(c)},
      {"overrides", flags},
      {"preprocess",
       {{"enabled", c.preprocess},
        {"sigma_spatial", c.bilateral.sigma_spatial},
        {"sigma_range", c.bilateral.sigma_range},
        {"radius", c.bilateral.effective_radius()}}},
      {"seeding",
       {{"method", method_tag(c.seeding.method)},
        {"gmm_k", c.seeding.gmm.components},
        {"gmm_max_iter", c.seeding.gmm.max_iterations},
        {"gmm_tol", c.seeding.gmm.tolerance},
        {"mbd_passes", c.seeding.mbd_passes},
        {"top_fraction", c.seeding.top_fraction}}},
      {"weighting",
       {{"enabled", c.weighting},
        {"sigma_factor", c.weight.sigma_factor},
        {"bg_weight", c.weight.bg_weight},
        {"reweigh_after_morph", c.reweigh_after_morph}}},
      {"morphology",
       {{"variant", c.morph.variant == MorphVariant::none      ? "none"
                    : c.morph.variant == MorphVariant::opening ? "open"
                                                               : "erode"},
        {"iterations", c.morph.iterations}}},
      {"segmenter",
       {{"kind", c.segmenter == SegmenterKind::growcut ? "gc" : "rw"},
        {"rw_beta", c.solver.rw_beta},
        {"rw_tol", c.solver.cg_tolerance},
        {"rw_max_iter", c.solver.cg_max_iterations},
        {"gc_max_sweeps", c.solver.gc_max_sweeps}}},
      {"border_thickness", c.border_thickness},
      {"invert", c.invert},
  };
}

inline nlohmann::json report_to_json(const SeedingReport& r) {
  nlohmann::json j{{"method", r.method}, {"fg_count", r.fg_count}, {"warnings", r.warnings}};
  if (r.threshold) j["threshold"] = *r.threshold;
  if (r.gmm_component) j["gmm_component"] = *r.gmm_component;
  if (r.gmm_iterations) j["gmm_iterations"] = *r.gmm_iterations;
  if (r.mbd_passes) j["mbd_passes"] = *r.mbd_passes;
  if (r.candidates) j["candidates"] = *r.candidates;
  return j;
}

inline nlohmann::json timings_to_json(const StageTimings& t) {
  return {{"preprocess", t.preprocess_ms},
          {"seeding", t.seeding_ms},
          {"weighting", t.weighting_ms},
          {"morphology", t.morphology_ms},
          {"segmentation", t.segmentation_ms}};
}

/// Run manifest. Everything except "timings_ms" is a deterministic function
/// of config and input.
inline nlohmann::json make_manifest(const PipelineConfig& config, const ImageGrid& input,
                                    const SegmentationOutcome& out,
                                    const std::vector<std::string>& artifacts) {
  return {
      {"schema", kManifestSchema},
      {"config", config_to_json(config)},
      {"input",
       {{"dims", input.shape().extents()},
        {"raw_min", input.raw_min()},
        {"raw_max", input.raw_max()}}},
      {"seeding", report_to_json(out.report)},
      {"merge_conflicts", out.merge_conflicts},
      {"counts",
       {{"fg_seeds", out.seeds.count(Label::fg)},
        {"bg_seeds", out.seeds.count(Label::bg)},
        {"label_fg", out.labels.count(Label::fg)}}},
      {"segmenter",
       {{"kind", out.solver.kind},
        {"iterations", out.solver.iterations},
        {"converged", out.solver.converged},
        {"residual", out.solver.residual}}},
      {"warnings", out.warnings},
      {"artifacts", artifacts},
      {"timings_ms", timings_to_json(out.timings)},
  };
}

struct RunStatus {
  ExitCode code = ExitCode::ok;
  std::string message;
  std::string stage;
  std::vector<std::string> artifacts;
};

namespace detail {

inline std::filesystem::path temp_sibling(const std::filesystem::path& target) {
  std::random_device rd;
  const auto parent = target.has_parent_path() ? target.parent_path() : std::filesystem::path(".");
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto p = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(rd()));
    if (!std::filesystem::exists(p)) return p;
  }
  throw Error(ErrorKind::io, "cannot allocate a temporary directory next to " + target.string());
}

/// Moves a finished directory into place, replacing any previous output.
inline void publish_directory(const std::filesystem::path& staged, const std::filesystem::path& target) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(target)) {
    const auto old = temp_sibling(target);
    fs::rename(target, old, ec);
    if (ec) throw Error(ErrorKind::io, "cannot replace " + target.string() + ": " + ec.message());
    fs::rename(staged, target, ec);
    if (ec) {
      fs::rename(old, target);
      throw Error(ErrorKind::io, "cannot publish " + target.string() + ": " + ec.message());
    }
    fs::remove_all(old, ec);
  } else {
    fs::rename(staged, target, ec);
    if (ec) throw Error(ErrorKind::io, "cannot publish " + target.string() + ": " + ec.message());
  }
}

}  // namespace detail

/// Segments one image file and writes labels, seeds, strengths, saliency
/// (saliency methods only) and manifest.json into `output_dir`. Nothing is
/// written unless every stage succeeds.
inline RunStatus run_once(const PipelineConfig& config, const std::string& input_path,
                          const std::string& output_dir) {
  namespace fs = std::filesystem;
  RunStatus status;
  fs::path staged;
  try {
    const ImageGrid input = io::load_image(input_path);
    const auto out = segment(config, input);
    const std::string ext = io::file_extension(input.shape());

    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("labels" + ext, io::encode_mask(out.labels));
    files.emplace_back("seeds" + ext, io::encode_mask(out.seeds));
    files.emplace_back("strength" + ext, io::encode_unit_field(input.shape(), out.strengths.weights()));
    if (out.saliency)
      files.emplace_back("saliency" + ext, io::encode_unit_field(input.shape(), out.saliency->scores));
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.first);
    names.emplace_back("manifest.json");
    files.emplace_back("manifest.json", make_manifest(config, input, out, names).dump(2) + "\n");

    const fs::path target(output_dir);
    staged = detail::temp_sibling(target);
    std::error_code ec;
    fs::create_directories(staged, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + staged.string() + ": " + ec.message());
    for (const auto& [name, bytes] : files) io::write_file((staged / name).string(), bytes);
    detail::publish_directory(staged, target);
    staged.clear();
    status.artifacts = std::move(names);
    status.message = "ok";
  } catch (const Error& e) {
    status.code = exit_code_for(e);
    status.message = e.what();
    status.stage = e.stage();
  } catch (const std::exception& e) {
    status.code = ExitCode::internal;
    status.message = e.what();
  }
  if (!staged.empty()) {
    std::error_code ec;
    fs::remove_all(staged, ec);
  }
  return status;
}

}  // namespace seedforge
