/* Interactive refinement sessions.
 *
 * A session starts from the automated seeding result (revision 1). Each user
 * stroke or undo is appended to the event history and bumps the revision by
 * one. The current seed mask is always the revision-1 mask with the active
 * strokes painted on top in order; an undo deactivates the latest active
 * stroke.
 *
 * Request coordinates are [x, y] or [x, y, z] with x along the fastest axis.
 */
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "seedforge/eval.hpp"
#include "seedforge/io.hpp"
#include "seedforge/pipeline.hpp"
#include "seedforge/run.hpp"

namespace seedforge::service {

inline constexpr std::size_t kMaxExtent2d = 512;
inline constexpr std::size_t kMaxExtent3d = 128;
inline constexpr const char* kDefaultPipeline = "P,Sm,W,Me,gc";

/// Error surfaced to HTTP clients as {code, stage, message}.
struct ServiceError : std::runtime_error {
  ServiceError(int status, std::string stage, const std::string& message)
      : std::runtime_error(message), status(status), stage(std::move(stage)) {}
  int status;
  std::string stage;
};

// ---------------------------------------------------------------- encoding

inline std::string base64_encode(std::string_view in) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(in[i])) << 16) |
                   (std::uint32_t(std::uint8_t(in[i + 1])) << 8) | std::uint8_t(in[i + 2]);
    out += kAlphabet[n >> 18];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i < in.size()) {
    auto n = std::uint32_t(std::uint8_t(in[i])) << 16;
    if (i + 1 < in.size()) n |= std::uint32_t(std::uint8_t(in[i + 1])) << 8;
    out += kAlphabet[n >> 18];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < in.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string base64_decode(std::string_view in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const int v = val(c);
    if (v < 0) throw Error(ErrorKind::parse, "invalid base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  return out;
}

/// Row-major bitfield, most significant bit first, zero padded.
template <class Pred>
std::string pack_bits(std::size_t n, Pred&& is_set) {
  std::string bytes((n + 7) / 8, '\0');
  for (std::size_t i = 0; i < n; ++i)
    if (is_set(i)) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (0x80 >> (i % 8)));
  return base64_encode(bytes);
}

inline std::vector<std::uint8_t> unpack_bits(std::string_view b64, std::size_t n) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() < (n + 7) / 8) throw Error(ErrorKind::parse, "bitfield too short");
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (std::uint8_t(bytes[i / 8]) >> (7 - i % 8)) & 1;
  return out;
}

// ----------------------------------------------------------------- session

struct Stroke {
  Label label = Label::fg;
  std::vector<std::size_t> voxels;  // linear indices
};

struct SessionEvent {
  enum class Kind { scribble, undo } kind = Kind::scribble;
  Stroke stroke;           // scribble only
  std::size_t revision = 0;  // revision produced by this event
};

class Session {
 public:
  Session(std::string id, std::string config_text, PipelineConfig config, ImageGrid input,
          std::string upload, std::optional<BinaryMask> truth)
      : id_(std::move(id)),
        config_text_(std::move(config_text)),
        config_(std::move(config)),
        input_(std::move(input)),
        upload_(std::move(upload)),
        truth_(std::move(truth)) {
    try {
      auto out = segment(config_, input_);
      base_seeds_ = out.seeds;
      base_strengths_ = out.strengths;
      features_ = std::move(out.features);
      seeds_ = std::move(out.seeds);
      strengths_ = std::move(out.strengths);
      labels_ = std::move(out.labels);
      report_ = std::move(out.report);
      saliency_ = std::move(out.saliency);
      solver_ = std::move(out.solver);
      warnings_ = std::move(out.warnings);
    } catch (const Error& e) {
      throw ServiceError(422, e.stage().empty() ? std::string(to_string(e.kind())) : e.stage(), e.what());
    }
  }

  const std::string& id() const { return id_; }
  std::mutex& mutex() const { return mutex_; }

  // The accessors below require the caller to hold mutex().
  std::size_t revision() const { return revision_; }
  const SeedMask& seeds() const { return seeds_; }
  const StrengthMap& strengths() const { return strengths_; }
  const LabelMap& labels() const { return labels_; }
  const std::optional<SaliencyMap>& saliency() const { return saliency_; }
  const std::vector<SessionEvent>& history() const { return history_; }
  const std::string& upload() const { return upload_; }
  const std::string& config_text() const { return config_text_; }
  const std::optional<BinaryMask>& truth() const { return truth_; }
  const Shape& shape() const { return input_.shape(); }

  /// Converts request coordinates ([x,y] / [x,y,z]) to linear indices.
  std::vector<std::size_t> resolve_voxels(const nlohmann::json& voxels) const {
    if (!voxels.is_array() || voxels.empty())
      throw ServiceError(400, "request", "voxel list must be a non-empty array");
    const Shape& s = input_.shape();
    std::vector<std::size_t> out;
    out.reserve(voxels.size());
    for (const auto& v : voxels) {
      if (!v.is_array() || v.size() != s.rank())
        throw ServiceError(400, "request", "each voxel needs " + std::to_string(s.rank()) + " coordinates");
      std::vector<long long> axis(s.rank());
      for (std::size_t k = 0; k < s.rank(); ++k) {
        if (!v[k].is_number_integer())
          throw ServiceError(400, "request", "voxel coordinates must be integers");
        axis[s.rank() - 1 - k] = v[k].get<long long>();
      }
      if (!s.contains(axis)) throw ServiceError(400, "request", "voxel out of bounds: " + v.dump());
      Coord c{};
      for (std::size_t a = 0; a < s.rank(); ++a) c[a] = static_cast<std::size_t>(axis[a]);
      out.push_back(s.index(c));
    }
    return out;
  }

  void add_scribble(Stroke stroke) {
    if (stroke.voxels.empty()) throw ServiceError(400, "request", "empty stroke");
    if (stroke.label != Label::fg && stroke.label != Label::bg)
      throw ServiceError(400, "request", "stroke label must be fg or bg");
    for (auto v : stroke.voxels)
      if (v >= input_.size()) throw ServiceError(400, "request", "voxel out of bounds");
    auto active = active_strokes();
    active.push_back(stroke);
    commit(active, {SessionEvent::Kind::scribble, std::move(stroke), revision_ + 1});
  }

  void undo() {
    auto active = active_strokes();
    if (active.empty()) throw ServiceError(409, "request", "nothing to undo");
    active.pop_back();
    commit(active, {SessionEvent::Kind::undo, {}, revision_ + 1});
  }

  /// Strokes still in effect after replaying scribbles and undos.
  std::vector<Stroke> active_strokes() const {
    std::vector<Stroke> active;
    for (const auto& e : history_) {
      if (e.kind == SessionEvent::Kind::scribble)
        active.push_back(e.stroke);
      else if (!active.empty())
        active.pop_back();
    }
    return active;
  }

  /// Seed mask rebuilt from the revision-1 state and the full history.
  SeedMask replay_seed_mask() const { return paint(active_strokes()).first; }

  std::optional<Metrics> metrics() const {
    if (!truth_) return std::nullopt;
    Metrics m;
    m.dice = dice(to_binary(labels_), *truth_);
    m.fg_seeds = seeds_.count(Label::fg);
    m.bg_seeds = seeds_.count(Label::bg);
    m.fg_seed_error_rate = m.fg_seeds ? seed_error(seeds_, *truth_) : 0.0;
    return m;
  }

  nlohmann::json state_json(bool full = true) const {
    using nlohmann::json;
    const Shape& s = input_.shape();
    std::vector<std::size_t> dims_xyz(s.extents().rbegin(), s.extents().rend());
    json j{
        {"id", id_},
        {"revision", revision_},
        {"config", config_text_},
        {"pipeline", to_pipeline_string(config_)},
        {"dims", dims_xyz},
        {"seeds",
         {{"fg", pack_bits(seeds_.size(), [&](std::size_t i) { return seeds_[i] == Label::fg; })},
          {"bg", pack_bits(seeds_.size(), [&](std::size_t i) { return seeds_[i] == Label::bg; })},
          {"fg_count", seeds_.count(Label::fg)},
          {"bg_count", seeds_.count(Label::bg)}}},
        {"labels",
         {{"fg", pack_bits(labels_.labels.size(), [&](std::size_t i) { return labels_.labels[i] == Label::fg; })},
          {"fg_count", labels_.count(Label::fg)}}},
        {"solver",
         {{"kind", solver_.kind},
          {"iterations", solver_.iterations},
          {"converged", solver_.converged},
          {"residual", solver_.residual}}},
        {"warnings", warnings_},
    };
    if (auto m = metrics())
      j["metrics"] = {{"dice", m->dice}, {"fg_seed_error_rate", m->fg_seed_error_rate}};
    if (full) {
      j["seeding"] = report_to_json(report_);
      j["history"] = history_json();
      j["artifacts"] = saliency_ ? json{"seed", "strength", "label", "saliency"}
                                 : json{"seed", "strength", "label"};
    }
    return j;
  }

  nlohmann::json history_json() const {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& e : history_) {
      nlohmann::json ev{{"revision", e.revision},
                        {"kind", e.kind == SessionEvent::Kind::scribble ? "scribble" : "undo"}};
      if (e.kind == SessionEvent::Kind::scribble) {
        ev["label"] = e.stroke.label == Label::fg ? "fg" : "bg";
        ev["voxels"] = e.stroke.voxels;
      }
      h.push_back(std::move(ev));
    }
    return h;
  }

  /// Replays a stored history (used for snapshot recovery).
  void replay(const nlohmann::json& history) {
    for (const auto& ev : history) {
      if (ev.at("kind") == "undo") {
        undo();
      } else {
        Stroke s;
        s.label = ev.at("label") == "fg" ? Label::fg : Label::bg;
        s.voxels = ev.at("voxels").get<std::vector<std::size_t>>();
        add_scribble(std::move(s));
      }
    }
  }

  /// Encoded artifact: "seed", "strength", "label" or "saliency".
  std::optional<std::string> artifact(std::string_view name) const {
    const Shape& s = input_.shape();
    if (name == "seed") return io::encode_mask(seeds_);
    if (name == "label") return io::encode_mask(labels_);
    if (name == "strength") return io::encode_unit_field(s, strengths_.weights());
    if (name == "saliency" && saliency_) return io::encode_unit_field(s, saliency_->scores);
    return std::nullopt;
  }

 private:
  std::pair<SeedMask, StrengthMap> paint(const std::vector<Stroke>& strokes) const {
    SeedMask seeds = base_seeds_;
    StrengthMap strengths = base_strengths_;
    for (const auto& st : strokes)
      for (auto v : st.voxels) {
        seeds.set(v, st.label);
        strengths.set(v, 1.0);
      }
    return {std::move(seeds), std::move(strengths)};
  }

  // All-or-nothing: state only changes if re-segmentation succeeds.
  void commit(const std::vector<Stroke>& active, SessionEvent event) {
    auto [seeds, strengths] = paint(active);
    SegmentationResult seg;
    try {
      seg = run_segmenter(config_, features_, seeds, strengths);
    } catch (const Error& e) {
      throw ServiceError(422, e.stage().empty() ? "segmentation" : e.stage(), e.what());
    }
    seeds_ = std::move(seeds);
    strengths_ = std::move(strengths);
    labels_ = std::move(seg.labels);
    solver_ = std::move(seg.diagnostics);
    history_.push_back(std::move(event));
    ++revision_;
  }

  std::string id_;
  std::string config_text_;
  PipelineConfig config_;
  ImageGrid input_;
  ImageGrid features_;
  std::string upload_;
  std::optional<BinaryMask> truth_;

  SeedMask base_seeds_;
  StrengthMap base_strengths_;
  SeedMask seeds_;
  StrengthMap strengths_;
  LabelMap labels_;
  SeedingReport report_;
  std::optional<SaliencyMap> saliency_;
  SegmenterDiagnostics solver_;
  std::vector<std::string> warnings_;

  std::size_t revision_ = 1;
  std::vector<SessionEvent> history_;
  mutable std::mutex mutex_;
};

/// Thread-safe registry of sessions with optional write-through snapshots
/// (one directory per session: upload, config, truth, history).
class SessionStore {
 public:
  explicit SessionStore(std::string snapshot_dir = {}) : snapshot_dir_(std::move(snapshot_dir)) {}

  std::shared_ptr<Session> create(const std::string& upload, const std::string& config_line,
                                  const std::optional<std::string>& truth_upload = std::nullopt,
                                  std::optional<std::string> id = std::nullopt) {
    if (!io::is_supported_format(upload))
      throw ServiceError(415, "ingestion", "unsupported image format (expected PGM P5 or grid3d)");
    io::RawImage raw;
    try {
      raw = io::decode_image(upload);
    } catch (const Error& e) {
      throw ServiceError(415, "ingestion", e.what());
    }
    const std::size_t cap = raw.shape.rank() == 2 ? kMaxExtent2d : kMaxExtent3d;
    for (auto e : raw.shape.extents())
      if (e > cap)
        throw ServiceError(413, "ingestion", "image " + raw.shape.to_string() + " exceeds the " +
                                                 std::to_string(cap) + " voxel per-axis cap");

    const std::string text = config_line.empty() ? kDefaultPipeline : config_line;
    PipelineConfig config;
    try {
      const auto spec = ConfigSpec::parse_line(text);
      config = parse_config(spec.text, spec.overrides);
    } catch (const Error& e) {
      throw ServiceError(400, "config", e.what());
    }

    std::optional<BinaryMask> truth;
    if (truth_upload && !truth_upload->empty()) {
      try {
        truth = io::decode_truth(*truth_upload);
      } catch (const Error& e) {
        throw ServiceError(415, "ingestion", std::string("truth: ") + e.what());
      }
      if (!(truth->shape == raw.shape))
        throw ServiceError(400, "ingestion", "truth dimensions differ from the image");
    }

    auto grid = normalize_intensities(raw.shape, raw.samples);
    auto session = std::make_shared<Session>(id ? *id : new_id(), text, config, std::move(grid),
                                             upload, std::move(truth));
    {
      std::unique_lock lock(mutex_);
      sessions_[session->id()] = session;
    }
    snapshot(*session);
    return session;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "request", "unknown session " + id);
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
  }

  /// Persists a session; caller holds the session's mutex (or owns it exclusively).
  void snapshot(const Session& s) const {
    if (snapshot_dir_.empty()) return;
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(snapshot_dir_) / s.id();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;
    try {
      const auto tmp = dir / "session.json.tmp";
      nlohmann::json j{{"schema", kManifestSchema},
                       {"id", s.id()},
                       {"config", s.config_text()},
                       {"revision", s.revision()},
                       {"history", s.history_json()}};
      if (!fs::exists(dir / "upload.bin")) io::write_file((dir / "upload.bin").string(), s.upload());
      if (s.truth() && !fs::exists(dir / "truth.pgm")) {
        std::vector<Label> l(s.truth()->bits.size());
        for (std::size_t i = 0; i < l.size(); ++i) l[i] = s.truth()->bits[i] ? Label::fg : Label::unlabeled;
        io::write_file((dir / "truth.pgm").string(), io::encode_mask(s.shape(), l));
      }
      io::write_file((dir / "seeds.mask").string(), io::encode_mask(s.seeds()));
      io::write_file((dir / "labels.mask").string(), io::encode_mask(s.labels()));
      io::write_file(tmp.string(), j.dump(2));
      fs::rename(tmp, dir / "session.json", ec);
    } catch (const Error&) {
      // Snapshots are best effort; the in-memory session stays authoritative.
    }
  }

  /// Loads every snapshot under the snapshot directory. Returns the count.
  std::size_t recover() {
    if (snapshot_dir_.empty()) return 0;
    namespace fs = std::filesystem;
    std::size_t n = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(snapshot_dir_, ec)) {
      const auto manifest = entry.path() / "session.json";
      if (!fs::exists(manifest)) continue;
      try {
        const auto j = nlohmann::json::parse(io::read_file(manifest.string()));
        std::optional<std::string> truth;
        if (fs::exists(entry.path() / "truth.pgm")) truth = io::read_file((entry.path() / "truth.pgm").string());
        auto session = std::make_shared<Session>(
            j.at("id").get<std::string>(), j.at("config").get<std::string>(),
            [&] {
              const auto spec = ConfigSpec::parse_line(j.at("config").get<std::string>());
              return parse_config(spec.text, spec.overrides);
            }(),
            [&] {
              const auto raw = io::decode_image(io::read_file((entry.path() / "upload.bin").string()));
              return normalize_intensities(raw.shape, raw.samples);
            }(),
            io::read_file((entry.path() / "upload.bin").string()),
            truth ? std::optional<BinaryMask>(io::decode_truth(*truth)) : std::nullopt);
        session->replay(j.at("history"));
        std::unique_lock lock(mutex_);
        sessions_[session->id()] = session;
        ++n;
      } catch (const std::exception&) {
        // Skip unreadable snapshots.
      }
    }
    return n;
  }

 private:
  static std::string new_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id(24, '0');
    for (auto& c : id) c = kHex[rng() & 15];
    return id;
  }

  std::string snapshot_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace seedforge::service
