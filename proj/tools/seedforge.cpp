// seedforge command-line front end: run, bench, serve.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "seedforge/seedforge.hpp"
#include "seedforge/service.hpp"

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw seedforge::Error(seedforge::ErrorKind::io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    lines.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
  }
  return lines;
}

std::string strip_report_extension(std::string out) {
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (out.size() > e.size() && out.compare(out.size() - e.size(), e.size(), e) == 0)
      return out.substr(0, out.size() - e.size());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace seedforge;
  CLI::App app{"seedforge: automated seed generation and seeded segmentation"};
  app.require_subcommand(1);

  std::string config_text = service::kDefaultPipeline;
  std::string in_path, out_path;
  bool invert = false, verbose = false;
  app.add_option("--config", config_text, "Pipeline string, e.g. P,Sm,W,Me,gc");
  app.add_option("--in", in_path, "Input image (PGM P5 or grid3d)");
  app.add_option("--out", out_path, "Output directory (run) or report stem (bench)");
  app.add_flag("--invert", invert, "Treat dark structures as foreground");
  app.add_flag("--verbose", verbose, "Print diagnostics to stderr");

  // Flag overrides shared with the pipeline config.
  FlagOverrides overrides;
  auto* run = app.add_subcommand("run", "Segment one image");
  run->fallthrough();
  const std::vector<std::pair<std::string, std::string>> value_flags = {
      {"bilateral-sigma-spatial", "Bilateral spatial sigma (voxels)"},
      {"bilateral-sigma-range", "Bilateral range sigma (normalized intensity)"},
      {"bilateral-radius", "Bilateral window half-width"},
      {"seed-method", "otsu|gmm|mbd|ft"},
      {"gmm-k", "GMM component count"},
      {"gmm-max-iter", "GMM EM iteration cap"},
      {"gmm-tol", "GMM mean log-likelihood tolerance"},
      {"mbd-passes", "Minimum barrier raster passes"},
      {"top-fraction", "Saliency fraction considered for binarization"},
      {"weighting", "on|off"},
      {"sigma-factor", "Seed weighting sigma / FG bounding-box diagonal"},
      {"bg-weight", "Strength of BG seeds when weighting"},
      {"morph", "open|erode|none"},
      {"morph-iters", "Morphology iterations"},
      {"segmenter", "gc|rw"},
      {"rw-beta", "Random walker edge weight beta"},
      {"rw-tol", "CG relative residual tolerance"},
      {"rw-max-iter", "CG iteration cap (0: 10 x unknowns)"},
      {"gc-max-sweeps", "GrowCut sweep cap"},
      {"border-thickness", "Border BG seed thickness"},
  };
  std::map<std::string, std::string> flag_values;
  for (const auto& [name, help] : value_flags) run->add_option("--" + name, flag_values[name], help);
  bool no_preprocess = false, reweigh = false;
  run->add_flag("--no-preprocess", no_preprocess, "Skip the bilateral pre-filter");
  run->add_flag("--reweigh-after-morph", reweigh, "Recompute seed weights after morphology");

  auto* bench = app.add_subcommand("bench", "Benchmark configs on synthetic phantoms");
  bench->fallthrough();
  std::string configs_file, phantoms_file;
  std::size_t threads = 1;
  bench->add_option("--configs", configs_file, "One pipeline string per line")->required();
  bench->add_option("--phantoms", phantoms_file, "One phantom descriptor per line")->required();
  bench->add_option("--threads", threads, "Worker threads");

  auto* serve = app.add_subcommand("serve", "Run the interactive session service");
  serve->fallthrough();
  std::string host = "127.0.0.1", snapshot_dir, static_dir;
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--snapshot-dir", snapshot_dir, "Write-through session snapshots");
  serve->add_option("--static-dir", static_dir, "Static UI assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::parse);
  }

  if (run->parsed()) {
    if (in_path.empty() || out_path.empty()) {
      std::cerr << "run: --in and --out are required\n";
      return static_cast<int>(ExitCode::parse);
    }
    PipelineConfig config;
    try {
      for (const auto& [k, v] : flag_values)
        if (!v.empty()) overrides[k] = v;
      if (no_preprocess) overrides["no-preprocess"] = "on";
      if (reweigh) overrides["reweigh-after-morph"] = "on";
      if (invert) overrides["invert"] = "on";
      config = parse_config(config_text, overrides);
    } catch (const Error& e) {
      std::cerr << "error [parse]: " << e.what() << "\n";
      return static_cast<int>(ExitCode::parse);
    }
    const auto status = run_once(config, in_path, out_path);
    if (status.code != ExitCode::ok) {
      std::cerr << "error [" << (status.stage.empty() ? "run" : status.stage) << "]: " << status.message
                << "\n";
      return static_cast<int>(status.code);
    }
    if (verbose) {
      std::cerr << "pipeline " << to_pipeline_string(config) << " -> " << out_path << "\n";
      for (const auto& a : status.artifacts) std::cerr << "  " << a << "\n";
    }
    return 0;
  }

  if (bench->parsed()) {
    try {
      std::vector<ConfigSpec> configs;
      for (const auto& l : read_lines(configs_file)) configs.push_back(ConfigSpec::parse_line(l));
      std::vector<PhantomDescriptor> phantoms;
      for (const auto& l : read_lines(phantoms_file))
        for (auto& d : parse_phantom_line(l)) phantoms.push_back(std::move(d));
      const auto report = benchmark(configs, phantoms, threads);
      const std::string stem = strip_report_extension(out_path.empty() ? "report" : out_path);
      io::write_file(stem + ".csv", report.to_csv());
      io::write_file(stem + ".json", report.to_json().dump(2) + "\n");
      for (const auto& a : report.aggregates)
        std::cout << a.config << ": dice median " << a.dice.median << ", seed error median "
                  << a.seed_error.median << " (" << a.failures << "/" << a.runs << " failed)\n";
      if (verbose) std::cerr << "wrote " << stem << ".csv and " << stem << ".json\n";
    } catch (const Error& e) {
      std::cerr << "error [bench]: " << e.what() << "\n";
      return static_cast<int>(exit_code_for(e));
    }
    return 0;
  }

  if (serve->parsed()) {
    service::SessionService svc(snapshot_dir, static_dir);
    const auto recovered = svc.store().recover();
    std::cerr << "seedforge serve on http://" << host << ":" << port;
    if (recovered) std::cerr << " (" << recovered << " sessions recovered)";
    std::cerr << "\n";
    if (!svc.listen(host, port)) {
      std::cerr << "error [serve]: cannot listen on " << host << ":" << port << "\n";
      return static_cast<int>(ExitCode::io);
    }
    return 0;
  }
  return static_cast<int>(ExitCode::parse);
}
