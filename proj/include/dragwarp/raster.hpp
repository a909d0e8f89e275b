#pragma once

// Raster primitives shared by every stage of the drag pipeline: RGB images,
// binary masks, disc morphology, outer-contour tracing, polygon filling and
// sub-pixel sampling.
//
// Coordinates: origin top-left, +x right, +y down, pixel centers on integers.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace dragwarp {

using Point2 = Eigen::Vector2d;
using Pixel = Eigen::Vector2i;
using Rgb = Eigen::Array<std::uint8_t, 3, 1>;

/// Largest accepted image side.
inline constexpr int kMaxImageSide = 16384;

/// Row-major 8-bit RGB raster.
class ImageBuffer {
 public:
  using Storage = Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

  ImageBuffer(int width, int height, const Rgb& fill = Rgb::Zero());
  /// Takes interleaved RGB bytes; size must be exactly width * height * 3.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> interleaved);

  int width() const { return width_; }
  int height() const { return height_; }

  Rgb at(int x, int y) const { return pixels_.row(index(x, y)).transpose(); }
  std::uint8_t channel(int x, int y, int c) const { return pixels_(index(x, y), c); }
  void set(int x, int y, const Rgb& value) { pixels_.row(index(x, y)) = value.transpose(); }

  const Storage& pixels() const { return pixels_; }
  Storage& pixels() { return pixels_; }
  const std::uint8_t* data() const { return pixels_.data(); }
  std::uint8_t* data() { return pixels_.data(); }

  bool operator==(const ImageBuffer& other) const;

 private:
  Eigen::Index index(int x, int y) const { return Eigen::Index(y) * width_ + x; }

  int width_;
  int height_;
  Storage pixels_;
};

/// Row-major boolean raster. Bits are stored as 0/1 bytes.
class BinaryMask {
 public:
  using Storage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BinaryMask(int width, int height, bool value = false);
  /// Rows are image rows. Any nonzero byte is taken as set.
  explicit BinaryMask(const Storage& bits);

  int width() const { return int(bits_.cols()); }
  int height() const { return int(bits_.rows()); }

  bool operator()(int x, int y) const { return bits_(y, x) != 0; }
  /// Bounds-safe membership; out-of-bounds is false.
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width() && y < height() && bits_(y, x) != 0;
  }
  void set(int x, int y, bool value = true) { bits_(y, x) = value ? 1 : 0; }

  const Storage& bits() const { return bits_; }
  std::uint8_t* data() { return bits_.data(); }
  const std::uint8_t* data() const { return bits_.data(); }

  long count() const { return long(bits_.cast<long>().sum()); }
  bool any() const { return (bits_ != 0).any(); }
  bool same_shape(const BinaryMask& other) const {
    return width() == other.width() && height() == other.height();
  }

  bool operator==(const BinaryMask& other) const;

 private:
  Storage bits_;
};

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b);
BinaryMask operator|(const BinaryMask& a, const BinaryMask& b);
BinaryMask operator~(const BinaryMask& a);
/// a AND NOT b.
BinaryMask minus(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& a, const BinaryMask& b);

/// Closed integer polyline around one 8-connected region.
struct Contour {
  std::vector<Pixel> vertices;
  int id = 0;
};

/// Disc structuring element {(i,j) : i^2 + j^2 <= radius^2}; out-of-bounds reads as false.
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);

/// Set pixels with at least one unset or out-of-bounds 8-neighbor.
BinaryMask boundary(const BinaryMask& mask);

/// One outer contour per 8-connected region, ordered by each region's first
/// pixel in raster order. Outer boundaries run counter-clockwise on screen.
/// Holes are not reported.
std::vector<Contour> find_contours(const BinaryMask& mask);

/// Pixels inside (even-odd) or on the closed polygon, clipped to the raster.
BinaryMask fill_contour(const Contour& contour, int width, int height);

/// Same membership rule as fill_contour, for sub-pixel points.
bool point_in_contour(const Contour& contour, const Point2& p);

/// Bilinear interpolation with coordinates clamped to [0, W-1] x [0, H-1],
/// quantized round-half-up.
Rgb bilinear_sample(const ImageBuffer& image, const Point2& p);

}  // namespace dragwarp
