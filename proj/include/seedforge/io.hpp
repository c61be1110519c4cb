/* Image and mask file formats.
 *
 *   PGM (P5)  2-D, maxval <= 255 (8-bit) or <= 65535 (16-bit big-endian).
 *   grid3d    3-D, ASCII header "G3D <dx> <dy> <dz> <bits>\n" followed by
 *             row-major little-endian unsigned samples, x fastest.
 *
 * Masks are written with FG=255, BG=128, UNLABELED=0.
 */
#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "seedforge/grid.hpp"

namespace seedforge::io {

inline constexpr std::uint8_t kMaskFg = 255;
inline constexpr std::uint8_t kMaskBg = 128;
inline constexpr std::uint8_t kMaskUnlabeled = 0;

/// Decoded raster before normalization.
struct RawImage {
  Shape shape;
  std::vector<double> samples;
  unsigned bits = 8;
};

namespace detail {

class Cursor {
 public:
  explicit Cursor(std::string_view data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(data_[pos_] - '0');
      if (v > 1'000'000'000UL) throw Error(ErrorKind::ingestion, std::string(what) + " too large");
      ++pos_;
    }
    if (pos_ == start) throw Error(ErrorKind::ingestion, std::string("expected ") + what);
    return v;
  }

  void expect_single_whitespace() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_])))
      throw Error(ErrorKind::ingestion, "malformed header terminator");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void write_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

inline RawImage decode_pgm(std::string_view data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
    throw Error(ErrorKind::ingestion, "not a binary PGM (P5) stream");
  detail::Cursor cur(data);
  cur.advance(2);
  const auto width = cur.read_uint("width");
  const auto height = cur.read_uint("height");
  const auto maxval = cur.read_uint("maxval");
  cur.expect_single_whitespace();
  if (width == 0 || height == 0) throw Error(ErrorKind::ingestion, "empty raster");
  if (maxval == 0 || maxval > 65535) throw Error(ErrorKind::ingestion, "PGM maxval out of range");
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (data.size() - cur.pos() < n * bytes_per)
    throw Error(ErrorKind::ingestion, "truncated PGM payload");
  RawImage img{Shape{height, width}, std::vector<double>(n), bytes_per == 1 ? 8u : 16u};
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + cur.pos());
  for (std::size_t i = 0; i < n; ++i) {
    img.samples[i] = bytes_per == 1 ? p[i] : static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return img;
}

inline RawImage decode_grid3d(std::string_view data) {
  if (data.substr(0, 3) != "G3D") throw Error(ErrorKind::ingestion, "not a grid3d stream");
  const auto eol = data.find('\n');
  if (eol == std::string_view::npos) throw Error(ErrorKind::ingestion, "grid3d header unterminated");
  std::istringstream hdr(std::string(data.substr(3, eol - 3)));
  long long dx = 0, dy = 0, dz = 0, bits = 0;
  if (!(hdr >> dx >> dy >> dz >> bits)) throw Error(ErrorKind::ingestion, "malformed grid3d header");
  std::string extra;
  if (hdr >> extra) throw Error(ErrorKind::ingestion, "trailing tokens in grid3d header");
  if (dx <= 0 || dy <= 0 || dz <= 0) throw Error(ErrorKind::ingestion, "empty raster");
  if (bits != 8 && bits != 16) throw Error(ErrorKind::ingestion, "grid3d bits must be 8 or 16");
  const std::size_t bytes_per = bits == 8 ? 1 : 2;
  const std::size_t n = static_cast<std::size_t>(dx) * static_cast<std::size_t>(dy) *
                        static_cast<std::size_t>(dz);
  const std::size_t off = eol + 1;
  if (data.size() - off < n * bytes_per) throw Error(ErrorKind::ingestion, "truncated grid3d payload");
  RawImage img{Shape{static_cast<std::size_t>(dz), static_cast<std::size_t>(dy),
                     static_cast<std::size_t>(dx)},
               std::vector<double>(n), static_cast<unsigned>(bits)};
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + off);
  for (std::size_t i = 0; i < n; ++i)
    img.samples[i] = bytes_per == 1 ? p[i] : static_cast<double>(p[2 * i] | (p[2 * i + 1] << 8));
  return img;
}

/// Dispatches on the magic bytes.
inline RawImage decode_image(std::string_view data) {
  if (data.substr(0, 2) == "P5") return decode_pgm(data);
  if (data.substr(0, 3) == "G3D") return decode_grid3d(data);
  throw Error(ErrorKind::ingestion, "unsupported image format");
}

inline bool is_supported_format(std::string_view data) {
  return data.substr(0, 2) == "P5" || data.substr(0, 3) == "G3D";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "read failed: " + path);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot create " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

inline ImageGrid load_image(const std::string& path) {
  const auto raw = decode_image(read_file(path));
  return normalize_intensities(raw.shape, raw.samples);
}

/// Encodes 8- or 16-bit samples; 2-D shapes become PGM, 3-D become grid3d.
inline std::string encode_samples(const Shape& shape, std::span<const std::uint16_t> samples,
                                  unsigned bits) {
  if (samples.size() != shape.size())
    throw Error(ErrorKind::dimension, "sample count does not match grid extents");
  if (bits != 8 && bits != 16) throw Error(ErrorKind::parameter, "bits must be 8 or 16");
  std::string out;
  if (shape.rank() == 2) {
    out = "P5\n" + std::to_string(shape.extent(1)) + " " + std::to_string(shape.extent(0)) +
          "\n" + (bits == 8 ? "255" : "65535") + "\n";
    for (auto s : samples) {
      if (bits == 8) {
        out.push_back(static_cast<char>(s & 0xff));
      } else {
        out.push_back(static_cast<char>(s >> 8));
        out.push_back(static_cast<char>(s & 0xff));
      }
    }
  } else {
    out = "G3D " + std::to_string(shape.extent(2)) + " " + std::to_string(shape.extent(1)) +
          " " + std::to_string(shape.extent(0)) + " " + std::to_string(bits) + "\n";
    for (auto s : samples) {
      if (bits == 8)
        out.push_back(static_cast<char>(s & 0xff));
      else
        detail::write_u16le(out, s);
    }
  }
  return out;
}

inline std::string file_extension(const Shape& shape) {
  return shape.rank() == 2 ? ".pgm" : ".g3d";
}

inline std::uint8_t mask_byte(Label l) {
  switch (l) {
    case Label::fg: return kMaskFg;
    case Label::bg: return kMaskBg;
    default: return kMaskUnlabeled;
  }
}

inline std::string encode_mask(const Shape& shape, std::span<const Label> labels) {
  std::vector<std::uint16_t> s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) s[i] = mask_byte(labels[i]);
  return encode_samples(shape, s, 8);
}

inline std::string encode_mask(const SeedMask& m) { return encode_mask(m.shape(), m.labels()); }
inline std::string encode_mask(const LabelMap& m) { return encode_mask(m.shape, m.labels); }

/// Values in [0,1] quantized to 8 bits.
inline std::string encode_unit_field(const Shape& shape, std::span<const double> values) {
  std::vector<std::uint16_t> s(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    s[i] = static_cast<std::uint16_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
  return encode_samples(shape, s, 8);
}

/// Reads a mask file back; values >= 192 are FG, >= 64 BG, else unlabeled.
inline SeedMask decode_mask(std::string_view data) {
  const auto raw = decode_image(data);
  SeedMask m(raw.shape);
  const double scale = raw.bits == 8 ? 1.0 : 255.0 / 65535.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = raw.samples[i] * scale;
    m.set(i, v >= 192 ? Label::fg : v >= 64 ? Label::bg : Label::unlabeled);
  }
  return m;
}

/// Any non-zero sample is FG.
inline BinaryMask decode_truth(std::string_view data) {
  const auto raw = decode_image(data);
  BinaryMask b{raw.shape, std::vector<std::uint8_t>(raw.samples.size())};
  for (std::size_t i = 0; i < b.bits.size(); ++i) b.bits[i] = raw.samples[i] != 0.0;
  return b;
}

}  // namespace seedforge::io
