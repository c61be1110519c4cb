/* Evaluation: overlap metrics, synthetic phantoms and the benchmark sweep.
 *
 * Phantoms draw noise from std::mt19937_64 (raw 64-bit output only) through
 * a fixed uniform mapping and Box-Muller, so a phantom is reproducible from
 * its descriptor in any language that implements MT19937-64.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "seedforge/pipeline.hpp"

namespace seedforge {

inline constexpr const char* kRngAlgorithm = "mt19937_64+box-muller";

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape, b.shape, "dice");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    na += a.bits[i] != 0;
    nb += b.bits[i] != 0;
    both += a.bits[i] && b.bits[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// Fraction of FG seeds lying on truth background.
inline double seed_error(const SeedMask& seeds, const BinaryMask& truth) {
  require_same_shape(seeds.shape(), truth.shape, "seed_error");
  std::size_t fg = 0, wrong = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i] != Label::fg) continue;
    ++fg;
    wrong += truth.bits[i] == 0;
  }
  if (fg == 0) throw Error(ErrorKind::degenerate, "seed error undefined without FG seeds");
  return static_cast<double>(wrong) / static_cast<double>(fg);
}

struct Metrics {
  double dice = 0.0;
  double fg_seed_error_rate = 0.0;
  std::size_t fg_seeds = 0;
  std::size_t bg_seeds = 0;
  StageTimings timings;
};

inline Metrics evaluate(const SegmentationOutcome& out, const BinaryMask& truth) {
  Metrics m;
  m.dice = dice(to_binary(out.labels), truth);
  m.fg_seed_error_rate = seed_error(out.seeds, truth);
  m.fg_seeds = out.seeds.count(Label::fg);
  m.bg_seeds = out.seeds.count(Label::bg);
  m.timings = out.timings;
  return m;
}

// ---------------------------------------------------------------- phantoms

class PhantomRng {
 public:
  explicit PhantomRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class PhantomShape { disk, ellipse, two_blob };

struct PhantomDescriptor {
  PhantomShape shape = PhantomShape::disk;
  std::vector<std::size_t> dims{64, 64};
  std::vector<double> radii{10.0};  // one value, or one per axis for ellipses
  double contrast = 0.8;
  double background = 0.2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;

  bool operator==(const PhantomDescriptor&) const = default;
};

struct Phantom {
  ImageGrid grid;
  BinaryMask truth;
  PhantomDescriptor descriptor;
};

inline std::string_view shape_name(PhantomShape s) {
  switch (s) {
    case PhantomShape::disk: return "disk";
    case PhantomShape::ellipse: return "ellipse";
    case PhantomShape::two_blob: return "two-blob";
  }
  return "?";
}

inline std::string describe(const PhantomDescriptor& d) {
  std::ostringstream os;
  os << shape_name(d.shape) << " dims=" << Shape(d.dims).to_string() << " radius=";
  for (std::size_t i = 0; i < d.radii.size(); ++i) os << (i ? "x" : "") << d.radii[i];
  os << " contrast=" << d.contrast << " noise=" << d.noise_sigma << " seed=" << d.seed;
  return os.str();
}

namespace detail {

struct Ellipsoid {
  std::array<double, kMaxRank> center{};
  std::array<double, kMaxRank> radii{};
};

inline std::vector<Ellipsoid> phantom_objects(const PhantomDescriptor& d, const Shape& shape) {
  const std::size_t rank = shape.rank();
  std::array<double, kMaxRank> radii{};
  if (d.radii.size() == 1) {
    for (std::size_t a = 0; a < rank; ++a) radii[a] = d.radii[0];
  } else if (d.radii.size() == rank && d.shape == PhantomShape::ellipse) {
    for (std::size_t a = 0; a < rank; ++a) radii[a] = d.radii[a];
  } else {
    throw Error(ErrorKind::parameter, "phantom radius must be one value (or one per axis for ellipses)");
  }
  for (std::size_t a = 0; a < rank; ++a)
    if (!(radii[a] > 0.0)) throw Error(ErrorKind::parameter, "phantom radius must be > 0");

  Ellipsoid base;
  for (std::size_t a = 0; a < rank; ++a) {
    base.center[a] = (static_cast<double>(shape.extent(a)) - 1.0) / 2.0;
    base.radii[a] = radii[a];
  }
  if (d.shape != PhantomShape::two_blob) return {base};

  // Two equal blobs along the last axis at 1/4 and 3/4 of its extent.
  const std::size_t last = rank - 1;
  const double ext = static_cast<double>(shape.extent(last));
  Ellipsoid a = base, b = base;
  a.center[last] = (ext - 1.0) / 4.0;
  b.center[last] = 3.0 * (ext - 1.0) / 4.0;
  if (b.center[last] - a.center[last] <= 2.0 * radii[last] + 1.0)
    throw Error(ErrorKind::parameter, "two-blob phantom: blobs overlap or touch");
  return {a, b};
}

}  // namespace detail

inline Phantom make_phantom(const PhantomDescriptor& d) {
  const Shape shape(d.dims);
  if (!(d.contrast > 0.0 && d.contrast <= 1.0))
    throw Error(ErrorKind::parameter, "phantom contrast must lie in (0,1]");
  if (!(d.noise_sigma >= 0.0)) throw Error(ErrorKind::parameter, "phantom noise sigma must be >= 0");
  const auto objects = detail::phantom_objects(d, shape);
  constexpr double kMargin = 2.0;
  for (const auto& o : objects)
    for (std::size_t a = 0; a < shape.rank(); ++a)
      if (o.center[a] - o.radii[a] < kMargin ||
          o.center[a] + o.radii[a] > static_cast<double>(shape.extent(a)) - 1.0 - kMargin)
        throw Error(ErrorKind::parameter, "phantom object exceeds the 2-voxel margin");

  BinaryMask truth{shape, std::vector<std::uint8_t>(shape.size(), 0)};
  std::vector<double> raw(shape.size());
  PhantomRng rng(d.seed);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    bool inside = false;
    for (const auto& o : objects) {
      double s = 0.0;
      for (std::size_t a = 0; a < shape.rank(); ++a) {
        const double t = (static_cast<double>(shape.coord(i, a)) - o.center[a]) / o.radii[a];
        s += t * t;
      }
      inside = inside || s <= 1.0;
    }
    truth.bits[i] = inside;
    raw[i] = d.background + (inside ? d.contrast : 0.0);
    if (d.noise_sigma > 0.0) raw[i] += d.noise_sigma * rng.normal();
  }
  return {normalize_intensities(shape, raw), std::move(truth), d};
}

/// Parses "disk dims=64x64 radius=10 contrast=0.6 noise=0.05 seed=7 count=20".
/// `count` expands into consecutive seeds.
inline std::vector<PhantomDescriptor> parse_phantom_line(std::string_view line) {
  std::istringstream is{std::string(line)};
  std::string kind;
  is >> kind;
  PhantomDescriptor d;
  if (kind == "disk") d.shape = PhantomShape::disk;
  else if (kind == "ellipse") d.shape = PhantomShape::ellipse;
  else if (kind == "two-blob") d.shape = PhantomShape::two_blob;
  else throw Error(ErrorKind::parse, "unknown phantom shape '" + kind + "'");
  std::size_t count = 1;
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t b = 0;
    while (true) {
      const auto e = s.find(sep, b);
      parts.push_back(s.substr(b, e == std::string::npos ? std::string::npos : e - b));
      if (e == std::string::npos) break;
      b = e + 1;
    }
    return parts;
  };
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::parse, "phantom field without '=': " + tok);
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dims") {
      d.dims.clear();
      for (const auto& p : split(val, 'x')) d.dims.push_back(detail::parse_count(key, p));
    } else if (key == "radius") {
      d.radii.clear();
      for (const auto& p : split(val, 'x')) d.radii.push_back(detail::parse_double(key, p));
    } else if (key == "contrast") {
      d.contrast = detail::parse_double(key, val);
    } else if (key == "background") {
      d.background = detail::parse_double(key, val);
    } else if (key == "noise") {
      d.noise_sigma = detail::parse_double(key, val);
    } else if (key == "seed") {
      d.seed = detail::parse_count(key, val);
    } else if (key == "count") {
      count = detail::parse_count(key, val);
    } else {
      throw Error(ErrorKind::parse, "unknown phantom field '" + key + "'");
    }
  }
  std::vector<PhantomDescriptor> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(d);
    out.back().seed = d.seed + k;
  }
  return out;
}

// --------------------------------------------------------------- benchmark

/// A pipeline string plus optional flag overrides, e.g.
/// "P,Sg,W,Me,rw gmm-k=2 rw-beta=60".
struct ConfigSpec {
  std::string text;
  FlagOverrides overrides;

  static ConfigSpec parse_line(std::string_view line) {
    std::istringstream is{std::string(line)};
    ConfigSpec c;
    is >> c.text;
    std::string tok;
    while (is >> tok) {
      if (tok.rfind("--", 0) == 0) tok = tok.substr(2);
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        c.overrides[tok] = "on";
      else
        c.overrides[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return c;
  }

  std::string label() const {
    std::string s = text;
    for (const auto& [k, v] : overrides) s += " " + k + "=" + v;
    return s;
  }
};

struct BenchmarkRow {
  std::size_t config_index = 0;
  std::size_t phantom_index = 0;
  std::string config;
  std::string phantom;
  std::optional<Metrics> metrics;
  std::string error_stage;
  std::string error;
};

struct Summary {
  double median = 0.0, mean = 0.0, std = 0.0;
};

/// Median, mean and population standard deviation.
inline Summary summarize(std::vector<double> v) {
  Summary s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(n));
  return s;
}

struct BenchmarkAggregate {
  std::size_t config_index = 0;
  std::string config;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Summary dice;
  Summary seed_error;

  bool operator==(const BenchmarkAggregate& o) const {
    auto eq = [](const Summary& a, const Summary& b) {
      return a.median == b.median && a.mean == b.mean && a.std == b.std;
    };
    return config == o.config && runs == o.runs && failures == o.failures && eq(dice, o.dice) &&
           eq(seed_error, o.seed_error);
  }
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkAggregate> aggregates;

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "kind,config,phantom,dice,fg_seed_error_rate,fg_seeds,bg_seeds,preprocess_ms,"
          "seeding_ms,weighting_ms,morphology_ms,segmentation_ms,runs,failures,dice_median,"
          "dice_mean,dice_std,seed_error_median,seed_error_mean,seed_error_std,error_stage,error\n";
    auto quote = [](const std::string& s) {
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    for (const auto& r : rows) {
      os << "run," << quote(r.config) << "," << quote(r.phantom) << ",";
      if (r.metrics) {
        const auto& m = *r.metrics;
        os << m.dice << "," << m.fg_seed_error_rate << "," << m.fg_seeds << "," << m.bg_seeds
           << "," << m.timings.preprocess_ms << "," << m.timings.seeding_ms << ","
           << m.timings.weighting_ms << "," << m.timings.morphology_ms << ","
           << m.timings.segmentation_ms;
      } else {
        os << ",,,,,,,,";
      }
      os << ",,,,,,,,," << quote(r.error_stage) << "," << quote(r.error) << "\n";
    }
    for (const auto& a : aggregates) {
      os << "aggregate," << quote(a.config) << ",,,,,,,,,,," << a.runs << "," << a.failures << ","
         << a.dice.median << "," << a.dice.mean << "," << a.dice.std << "," << a.seed_error.median
         << "," << a.seed_error.mean << "," << a.seed_error.std << ",,\n";
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    json j;
    j["schema"] = 1;
    j["rng"] = kRngAlgorithm;
    j["rows"] = json::array();
    for (const auto& r : rows) {
      json row{{"config", r.config}, {"phantom", r.phantom}};
      if (r.metrics) {
        const auto& m = *r.metrics;
        row["dice"] = m.dice;
        row["fg_seed_error_rate"] = m.fg_seed_error_rate;
        row["fg_seeds"] = m.fg_seeds;
        row["bg_seeds"] = m.bg_seeds;
        row["timings_ms"] = {{"preprocess", m.timings.preprocess_ms},
                             {"seeding", m.timings.seeding_ms},
                             {"weighting", m.timings.weighting_ms},
                             {"morphology", m.timings.morphology_ms},
                             {"segmentation", m.timings.segmentation_ms}};
      } else {
        row["error"] = {{"stage", r.error_stage}, {"message", r.error}};
      }
      j["rows"].push_back(std::move(row));
    }
    j["aggregates"] = json::array();
    for (const auto& a : aggregates) {
      auto summ = [](const Summary& s) {
        return json{{"median", s.median}, {"mean", s.mean}, {"std", s.std}};
      };
      j["aggregates"].push_back({{"config", a.config},
                                 {"runs", a.runs},
                                 {"failures", a.failures},
                                 {"dice", summ(a.dice)},
                                 {"fg_seed_error_rate", summ(a.seed_error)}});
    }
    return j;
  }
};

inline BenchmarkRow run_benchmark_cell(const ConfigSpec& spec, const Phantom& phantom) {
  BenchmarkRow row;
  row.config = spec.label();
  row.phantom = describe(phantom.descriptor);
  try {
    const auto config = parse_config(spec.text, spec.overrides);
    const auto out = segment(config, phantom.grid);
    row.metrics = evaluate(out, phantom.truth);
  } catch (const Error& e) {
    row.error_stage = e.stage().empty() ? std::string(to_string(e.kind())) : e.stage();
    row.error = e.what();
  } catch (const std::exception& e) {
    row.error_stage = "internal";
    row.error = e.what();
  }
  return row;
}

/// Every config on every phantom. Rows are ordered config-major regardless
/// of `threads`; failed runs become error rows.
inline BenchmarkReport benchmark(const std::vector<ConfigSpec>& configs,
                                 const std::vector<PhantomDescriptor>& phantoms,
                                 std::size_t threads = 1) {
  if (configs.empty() || phantoms.empty())
    throw Error(ErrorKind::parameter, "benchmark needs at least one config and one phantom");
  std::vector<std::optional<Phantom>> built(phantoms.size());
  std::vector<std::string> build_errors(phantoms.size());
  for (std::size_t p = 0; p < phantoms.size(); ++p) {
    try {
      built[p] = make_phantom(phantoms[p]);
    } catch (const Error& e) {
      build_errors[p] = e.what();
    }
  }

  BenchmarkReport report;
  report.rows.resize(configs.size() * phantoms.size());
  auto cell = [&](std::size_t k) {
    const std::size_t c = k / phantoms.size(), p = k % phantoms.size();
    BenchmarkRow row;
    if (built[p]) {
      row = run_benchmark_cell(configs[c], *built[p]);
    } else {
      row.config = configs[c].label();
      row.phantom = describe(phantoms[p]);
      row.error_stage = "phantom";
      row.error = build_errors[p];
    }
    row.config_index = c;
    row.phantom_index = p;
    report.rows[k] = std::move(row);
  };

  const std::size_t total = report.rows.size();
  threads = std::clamp<std::size_t>(threads, 1, total);
  if (threads == 1) {
    for (std::size_t k = 0; k < total; ++k) cell(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < total; k = next++) cell(k);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t c = 0; c < configs.size(); ++c) {
    BenchmarkAggregate agg;
    agg.config_index = c;
    agg.config = configs[c].label();
    std::vector<double> d, s;
    for (std::size_t p = 0; p < phantoms.size(); ++p) {
      const auto& row = report.rows[c * phantoms.size() + p];
      ++agg.runs;
      if (!row.metrics) {
        ++agg.failures;
        continue;
      }
      d.push_back(row.metrics->dice);
      s.push_back(row.metrics->fg_seed_error_rate);
    }
    agg.dice = summarize(std::move(d));
    agg.seed_error = summarize(std::move(s));
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

}  // namespace seedforge
