/* Raster, mask and label types shared by every pipeline stage.
 *
 * Voxels are stored row-major with the last axis varying fastest. A 2-D
 * grid has extents (rows, cols); a 3-D grid has (slices, rows, cols).
 * Axes of extent 1 are treated as absent for adjacency and border tests,
 * so a 1xN grid behaves like a 1-D row.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seedforge/error.hpp"

namespace seedforge {

enum class Label : std::uint8_t { unlabeled = 0, fg = 1, bg = 2 };

inline constexpr std::size_t kMaxRank = 3;

using Coord = std::array<std::size_t, kMaxRank>;

class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<std::size_t> extents)
      : Shape(std::vector<std::size_t>(extents)) {}

  explicit Shape(std::vector<std::size_t> extents) : extents_(std::move(extents)) {
    if (extents_.size() < 2 || extents_.size() > kMaxRank)
      throw Error(ErrorKind::parameter, "grid rank must be 2 or 3");
    for (auto e : extents_)
      if (e == 0) throw Error(ErrorKind::parameter, "grid extents must be >= 1");
    strides_.assign(extents_.size(), 1);
    for (std::size_t a = extents_.size() - 1; a-- > 0;)
      strides_[a] = strides_[a + 1] * extents_[a + 1];
    size_ = strides_[0] * extents_[0];
  }

  std::size_t rank() const noexcept { return extents_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t extent(std::size_t axis) const { return extents_[axis]; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  const std::vector<std::size_t>& extents() const noexcept { return extents_; }

  std::size_t min_extent() const {
    return *std::min_element(extents_.begin(), extents_.end());
  }

  std::size_t coord(std::size_t index, std::size_t axis) const {
    return (index / strides_[axis]) % extents_[axis];
  }

  Coord coords(std::size_t index) const {
    Coord c{};
    for (std::size_t a = 0; a < rank(); ++a) c[a] = coord(index, a);
    return c;
  }

  std::size_t index(std::span<const std::size_t> c) const {
    std::size_t i = 0;
    for (std::size_t a = 0; a < rank(); ++a) i += c[a] * strides_[a];
    return i;
  }
  std::size_t index(const Coord& c) const {
    return index(std::span<const std::size_t>(c.data(), rank()));
  }

  bool contains(std::span<const long long> c) const {
    if (c.size() != rank()) return false;
    for (std::size_t a = 0; a < rank(); ++a)
      if (c[a] < 0 || static_cast<std::size_t>(c[a]) >= extents_[a]) return false;
    return true;
  }

  /// Number of axes with extent > 1; these carry face adjacency.
  std::size_t active_axes() const {
    return static_cast<std::size_t>(
        std::count_if(extents_.begin(), extents_.end(), [](auto e) { return e > 1; }));
  }

  /// Visit face neighbours of `index` (4 in 2-D, 6 in 3-D), clipped at the
  /// border, in increasing linear-index order.
  template <class F>
  void for_each_neighbor(std::size_t index, F&& f) const {
    std::array<std::size_t, 2 * kMaxRank> found{};
    std::size_t n = 0;
    for (std::size_t a = 0; a < rank(); ++a) {
      if (extents_[a] < 2) continue;
      const std::size_t c = coord(index, a);
      if (c > 0) found[n++] = index - strides_[a];
      if (c + 1 < extents_[a]) found[n++] = index + strides_[a];
    }
    std::sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t k = 0; k < n; ++k) f(found[k]);
  }

  /// True when every face neighbour exists (the voxel is not on a face).
  bool has_full_neighborhood(std::size_t index) const {
    for (std::size_t a = 0; a < rank(); ++a) {
      if (extents_[a] < 2) continue;
      const std::size_t c = coord(index, a);
      if (c == 0 || c + 1 == extents_[a]) return false;
    }
    return true;
  }

  /// Distance in voxels to the nearest face along any active axis.
  std::size_t face_distance(std::size_t index) const {
    std::size_t d = SIZE_MAX;
    for (std::size_t a = 0; a < rank(); ++a) {
      if (extents_[a] < 2) continue;
      const std::size_t c = coord(index, a);
      d = std::min({d, c, extents_[a] - 1 - c});
    }
    return d;
  }

  bool operator==(const Shape& o) const { return extents_ == o.extents_; }

  std::string to_string() const {
    std::string s;
    for (std::size_t a = 0; a < rank(); ++a) {
      if (a) s += 'x';
      s += std::to_string(extents_[a]);
    }
    return s;
  }

 private:
  std::vector<std::size_t> extents_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw Error(ErrorKind::dimension, std::string(what) + ": shape mismatch (" +
                                          a.to_string() + " vs " + b.to_string() + ")");
}

/// Scalar raster with intensities normalized to [0,1]. The raw range seen at
/// ingestion is kept so values can be mapped back.
class ImageGrid {
 public:
  ImageGrid() = default;

  /// Takes already-normalized values; they must lie in [0,1].
  ImageGrid(Shape shape, std::vector<double> values, double raw_min = 0.0,
            double raw_max = 1.0, std::vector<double> spacing = {})
      : shape_(std::move(shape)),
        values_(std::move(values)),
        raw_min_(raw_min),
        raw_max_(raw_max),
        spacing_(std::move(spacing)) {
    if (values_.size() != shape_.size())
      throw Error(ErrorKind::dimension, "value count does not match grid extents");
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0))
        throw Error(ErrorKind::parameter, "normalized intensity outside [0,1]");
    if (spacing_.empty()) spacing_.assign(shape_.rank(), 1.0);
    if (spacing_.size() != shape_.rank())
      throw Error(ErrorKind::parameter, "spacing rank mismatch");
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double raw_min() const noexcept { return raw_min_; }
  double raw_max() const noexcept { return raw_max_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }

  double raw_value(std::size_t i) const {
    return raw_min_ + values_[i] * (raw_max_ - raw_min_);
  }

  /// Same metadata, new normalized values.
  ImageGrid with_values(std::vector<double> values) const {
    return ImageGrid(shape_, std::move(values), raw_min_, raw_max_, spacing_);
  }

  ImageGrid inverted() const {
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return 1.0 - x; });
    return ImageGrid(shape_, std::move(v), raw_max_, raw_min_, spacing_);
  }

 private:
  Shape shape_;
  std::vector<double> values_;
  double raw_min_ = 0.0;
  double raw_max_ = 1.0;
  std::vector<double> spacing_;
};

/// Affine map of raw samples onto [0,1]. A constant raster maps to zeros.
inline ImageGrid normalize_intensities(const Shape& shape, std::span<const double> raw,
                                       std::vector<double> spacing = {}) {
  if (raw.empty()) throw Error(ErrorKind::ingestion, "empty raster");
  if (raw.size() != shape.size())
    throw Error(ErrorKind::ingestion, "sample count does not match grid extents");
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> v(raw.size(), 0.0);
  if (hi > lo) {
    const double span = hi - lo;
    for (std::size_t i = 0; i < raw.size(); ++i)
      v[i] = std::clamp((raw[i] - lo) / span, 0.0, 1.0);
  }
  return ImageGrid(shape, std::move(v), lo, hi, std::move(spacing));
}

class SeedMask {
 public:
  SeedMask() = default;
  explicit SeedMask(Shape shape, Label fill = Label::unlabeled)
      : shape_(std::move(shape)), labels_(shape_.size(), fill) {}
  SeedMask(Shape shape, std::vector<Label> labels)
      : shape_(std::move(shape)), labels_(std::move(labels)) {
    if (labels_.size() != shape_.size())
      throw Error(ErrorKind::dimension, "label count does not match grid extents");
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return labels_.size(); }
  Label operator[](std::size_t i) const { return labels_[i]; }
  void set(std::size_t i, Label l) { labels_[i] = l; }
  std::span<const Label> labels() const noexcept { return labels_; }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
  }

  /// Mask holding only the voxels carrying `l`.
  SeedMask only(Label l) const {
    SeedMask out(shape_);
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == l) out.labels_[i] = l;
    return out;
  }

  bool operator==(const SeedMask& o) const {
    return shape_ == o.shape_ && labels_ == o.labels_;
  }

 private:
  Shape shape_;
  std::vector<Label> labels_;
};

/// Per-voxel seed confidence paired with a SeedMask. Zero on unlabeled voxels.
class StrengthMap {
 public:
  StrengthMap() = default;
  explicit StrengthMap(Shape shape) : shape_(std::move(shape)), weights_(shape_.size(), 0.0) {}
  StrengthMap(Shape shape, std::vector<double> weights)
      : shape_(std::move(shape)), weights_(std::move(weights)) {
    if (weights_.size() != shape_.size())
      throw Error(ErrorKind::dimension, "weight count does not match grid extents");
  }

  /// Strength 1 on every labeled voxel.
  static StrengthMap uniform(const SeedMask& mask) {
    StrengthMap s(mask.shape());
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i] != Label::unlabeled) s.weights_[i] = 1.0;
    return s;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  void set(std::size_t i, double w) { weights_[i] = w; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Checks weights in [0,1] and zero on every unlabeled voxel of `mask`.
  bool consistent_with(const SeedMask& mask) const {
    if (!(shape_ == mask.shape())) return false;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0 && weights_[i] <= 1.0)) return false;
      if (mask[i] == Label::unlabeled && weights_[i] != 0.0) return false;
    }
    return true;
  }

  bool operator==(const StrengthMap& o) const {
    return shape_ == o.shape_ && weights_ == o.weights_;
  }

 private:
  Shape shape_;
  std::vector<double> weights_;
};

/// Binary segmentation result. Random Walker also fills `fg_probability`.
struct LabelMap {
  Shape shape;
  std::vector<Label> labels;  // fg or bg only
  std::optional<std::vector<double>> fg_probability;

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
  }

  std::vector<std::uint8_t> fg_mask() const {
    std::vector<std::uint8_t> m(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == Label::fg;
    return m;
  }

  bool operator==(const LabelMap& o) const = default;
};

/// Binary FG/BG mask, e.g. a ground truth.
struct BinaryMask {
  Shape shape;
  std::vector<std::uint8_t> bits;  // 1 = FG

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }
  bool operator==(const BinaryMask& o) const = default;
};

inline BinaryMask to_binary(const LabelMap& l) { return {l.shape, l.fg_mask()}; }

inline BinaryMask to_binary(const SeedMask& m, Label which = Label::fg) {
  BinaryMask b{m.shape(), std::vector<std::uint8_t>(m.size(), 0)};
  for (std::size_t i = 0; i < m.size(); ++i) b.bits[i] = m[i] == which;
  return b;
}

/// BG seeds on every voxel within `thickness` of a face of the volume.
inline SeedMask mask_border(const Shape& shape, std::size_t thickness) {
  if (thickness < 1)
    throw Error(ErrorKind::parameter, "border thickness must be >= 1");
  if (2 * thickness >= shape.min_extent())
    throw Error(ErrorKind::parameter,
                "border thickness " + std::to_string(thickness) + " too large for grid " +
                    shape.to_string());
  SeedMask m(shape);
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (shape.face_distance(i) < thickness) m.set(i, Label::bg);
  return m;
}

inline SeedMask mask_border(const ImageGrid& grid, std::size_t thickness) {
  return mask_border(grid.shape(), thickness);
}

struct MergeResult {
  SeedMask mask;
  std::size_t conflicts = 0;  // voxels labeled FG in `fg` but BG in `bg`
};

/// Union of FG and BG seed sets. BG wins where both claim a voxel.
inline MergeResult merge_seeds(const SeedMask& fg, const SeedMask& bg) {
  require_same_shape(fg.shape(), bg.shape(), "merge_seeds");
  MergeResult r{SeedMask(fg.shape()), 0};
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const bool f = fg[i] == Label::fg;
    const bool b = bg[i] == Label::bg;
    if (b) {
      r.mask.set(i, Label::bg);
      if (f) ++r.conflicts;
    } else if (f) {
      r.mask.set(i, Label::fg);
    }
  }
  return r;
}

}  // namespace seedforge
