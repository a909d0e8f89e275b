#include "dragwarp/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "dragwarp/errors.hpp"

namespace dragwarp {

namespace {

void check_dimensions(int width, int height) {
  if (width < 1 || height < 1 || width > kMaxImageSide || height > kMaxImageSide) {
    throw InvalidInput("raster dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                       " out of range");
  }
}

void check_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw InvalidInput("mask dimension mismatch");
  }
}

// Half widths of the disc rows: w[dy + r] = max w with w^2 + dy^2 <= r^2.
std::vector<int> disc_half_widths(int radius) {
  std::vector<int> widths(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    const long rem = long(radius) * radius - long(dy) * dy;
    long w = long(std::sqrt(double(rem)));
    while (w * w > rem) --w;
    while ((w + 1) * (w + 1) <= rem) ++w;
    widths[dy + radius] = int(w);
  }
  return widths;
}

// prefix[y * (W + 1) + x] = number of set bits in row y left of column x.
std::vector<int> row_prefix_counts(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> prefix(std::size_t(h) * (w + 1), 0);
  for (int y = 0; y < h; ++y) {
    int* row = prefix.data() + std::size_t(y) * (w + 1);
    const std::uint8_t* bits = mask.data() + std::size_t(y) * w;
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (bits[x] ? 1 : 0);
  }
  return prefix;
}

// Neighbor directions; increasing index turns counter-clockwise on screen.
constexpr std::array<std::array<int, 2>, 8> kDirections = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1},
}};

int direction_between(const Pixel& from, const Pixel& to) {
  const int dx = to.x() - from.x();
  const int dy = to.y() - from.y();
  for (int k = 0; k < 8; ++k) {
    if (kDirections[k][0] == dx && kDirections[k][1] == dy) return k;
  }
  return -1;
}

Contour trace_outer_border(const BinaryMask& mask, const Pixel& start) {
  Contour contour;
  contour.vertices.push_back(start);

  auto neighbor = [&](const Pixel& p, int k) {
    return Pixel(p.x() + kDirections[k][0], p.y() + kDirections[k][1]);
  };

  // Clockwise search from the west neighbor, which is background for a raster-first pixel.
  int found = -1;
  for (int i = 0; i < 8; ++i) {
    const int k = (4 - i + 8) % 8;
    const Pixel q = neighbor(start, k);
    if (mask.contains(q.x(), q.y())) {
      found = k;
      break;
    }
  }
  if (found < 0) return contour;

  const Pixel first_neighbor = neighbor(start, found);
  Pixel previous = first_neighbor;
  Pixel current = start;
  while (true) {
    const int back = direction_between(current, previous);
    Pixel next = current;
    for (int i = 1; i <= 8; ++i) {
      const int k = (back + i) % 8;
      const Pixel q = neighbor(current, k);
      if (mask.contains(q.x(), q.y())) {
        next = q;
        break;
      }
    }
    if (next == start && current == first_neighbor) break;
    previous = current;
    current = next;
    contour.vertices.push_back(current);
  }
  return contour;
}

// Clip the lattice points v0 + t * step, t in [0, count], to [lo, hi] along one axis.
void clip_axis(int origin, int step, int lo, int hi, long& t_min, long& t_max) {
  if (step == 0) {
    if (origin < lo || origin > hi) t_max = t_min - 1;
    return;
  }
  auto floor_div = [](long a, long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); };
  auto ceil_div = [&](long a, long b) { return -floor_div(-a, b); };
  long a, b;
  if (step > 0) {
    a = ceil_div(lo - origin, step);
    b = floor_div(hi - origin, step);
  } else {
    a = ceil_div(hi - origin, step);
    b = floor_div(lo - origin, step);
  }
  t_min = std::max(t_min, a);
  t_max = std::min(t_max, b);
}

void rasterize_segment(BinaryMask& out, const Pixel& a, const Pixel& b) {
  const int dx = b.x() - a.x();
  const int dy = b.y() - a.y();
  const int g = std::gcd(std::abs(dx), std::abs(dy));
  if (g == 0) {
    if (a.x() >= 0 && a.y() >= 0 && a.x() < out.width() && a.y() < out.height()) {
      out.set(a.x(), a.y());
    }
    return;
  }
  const int sx = dx / g;
  const int sy = dy / g;
  long t_min = 0;
  long t_max = g;
  clip_axis(a.x(), sx, 0, out.width() - 1, t_min, t_max);
  clip_axis(a.y(), sy, 0, out.height() - 1, t_min, t_max);
  for (long t = t_min; t <= t_max; ++t) {
    out.set(int(a.x() + t * sx), int(a.y() + t * sy));
  }
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  constexpr double kTol = 1e-9;
  const Point2 ab = b - a;
  const Point2 ap = p - a;
  const double cross = ab.x() * ap.y() - ab.y() * ap.x();
  if (std::abs(cross) > kTol * std::max(1.0, ab.norm())) return false;
  const double dot = ab.dot(ap);
  return dot >= -kTol && dot <= ab.squaredNorm() + kTol;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, const Rgb& fill) : width_(width), height_(height) {
  check_dimensions(width, height);
  pixels_.resize(Eigen::Index(width) * height, 3);
  pixels_.rowwise() = fill.transpose();
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> interleaved)
    : width_(width), height_(height) {
  check_dimensions(width, height);
  if (interleaved.size() != std::size_t(width) * height * 3) {
    throw InvalidInput("pixel array length does not match " + std::to_string(width) + "x" +
                       std::to_string(height));
  }
  pixels_ = Eigen::Map<const Storage>(interleaved.data(), Eigen::Index(width) * height, 3);
}

bool ImageBuffer::operator==(const ImageBuffer& other) const {
  return width_ == other.width_ && height_ == other.height_ && (pixels_ == other.pixels_).all();
}

BinaryMask::BinaryMask(int width, int height, bool value) {
  check_dimensions(width, height);
  bits_ = Storage::Constant(height, width, value ? 1 : 0);
}

BinaryMask::BinaryMask(const Storage& bits) {
  check_dimensions(int(bits.cols()), int(bits.rows()));
  bits_ = (bits != 0).cast<std::uint8_t>();
}

bool BinaryMask::operator==(const BinaryMask& other) const {
  return same_shape(other) && (bits_ == other.bits_).all();
}

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) {
  check_same_shape(a, b);
  return BinaryMask(BinaryMask::Storage(a.bits() * b.bits()));
}

BinaryMask operator|(const BinaryMask& a, const BinaryMask& b) {
  check_same_shape(a, b);
  return BinaryMask(BinaryMask::Storage(a.bits().max(b.bits())));
}

BinaryMask operator~(const BinaryMask& a) {
  return BinaryMask(BinaryMask::Storage((a.bits() == 0).cast<std::uint8_t>()));
}

BinaryMask minus(const BinaryMask& a, const BinaryMask& b) {
  check_same_shape(a, b);
  return BinaryMask(BinaryMask::Storage(a.bits() * (b.bits() == 0).cast<std::uint8_t>()));
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  check_same_shape(a, b);
  return ((a.bits() != 0) <= (b.bits() != 0)).all();
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw InvalidInput("dilation radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  const auto widths = disc_half_widths(radius);
  const auto prefix = row_prefix_counts(mask);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    std::uint8_t* dst = out.data() + std::size_t(y) * w;
    for (int dy = -radius; dy <= radius; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= h) continue;
      const int* row = prefix.data() + std::size_t(yy) * (w + 1);
      if (row[w] == 0) continue;
      const int half = widths[dy + radius];
      for (int x = 0; x < w; ++x) {
        if (dst[x]) continue;
        const int lo = std::max(0, x - half);
        const int hi = std::min(w - 1, x + half);
        if (row[hi + 1] - row[lo] > 0) dst[x] = 1;
      }
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius < 0) throw InvalidInput("erosion radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  const auto widths = disc_half_widths(radius);
  const auto prefix = row_prefix_counts(mask);
  BinaryMask out(w, h);
  for (int y = radius; y < h - radius; ++y) {
    std::uint8_t* dst = out.data() + std::size_t(y) * w;
    for (int x = radius; x < w - radius; ++x) {
      if (!mask(x, y)) continue;
      bool all = true;
      for (int dy = -radius; dy <= radius && all; ++dy) {
        const int* row = prefix.data() + std::size_t(y + dy) * (w + 1);
        const int half = widths[dy + radius];
        all = row[x + half + 1] - row[x - half] == 2 * half + 1;
      }
      dst[x] = all ? 1 : 0;
    }
  }
  return out;
}

BinaryMask boundary(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!mask.contains(x + dx, y + dy)) {
            edge = true;
            break;
          }
        }
      }
      if (edge) out.set(x, y);
    }
  }
  return out;
}

std::vector<Contour> find_contours(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> visited(std::size_t(w) * h, 0);
  std::vector<Contour> contours;
  std::vector<Pixel> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y) || visited[std::size_t(y) * w + x]) continue;

      // Flood the 8-connected component so later scan hits skip it.
      stack.assign(1, Pixel(x, y));
      visited[std::size_t(y) * w + x] = 1;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (const auto& d : kDirections) {
          const int nx = p.x() + d[0];
          const int ny = p.y() + d[1];
          if (!mask.contains(nx, ny)) continue;
          auto& seen = visited[std::size_t(ny) * w + nx];
          if (seen) continue;
          seen = 1;
          stack.emplace_back(nx, ny);
        }
      }

      Contour contour = trace_outer_border(mask, Pixel(x, y));
      contour.id = int(contours.size());
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

BinaryMask fill_contour(const Contour& contour, int width, int height) {
  BinaryMask out(width, height);
  const auto& v = contour.vertices;
  const std::size_t n = v.size();
  if (n == 0) return out;

  for (std::size_t i = 0; i < n; ++i) {
    rasterize_segment(out, v[i], v[(i + 1) % n]);
  }
  if (n < 3) return out;

  int y_min = v[0].y();
  int y_max = v[0].y();
  for (const auto& p : v) {
    y_min = std::min(y_min, p.y());
    y_max = std::max(y_max, p.y());
  }
  y_min = std::max(y_min, 0);
  y_max = std::min(y_max, height - 1);

  std::vector<double> crossings;
  for (int y = y_min; y <= y_max; ++y) {
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Pixel& a = v[i];
      const Pixel& b = v[(i + 1) % n];
      if ((a.y() <= y && y < b.y()) || (b.y() <= y && y < a.y())) {
        crossings.push_back(a.x() + double(y - a.y()) * (b.x() - a.x()) / double(b.y() - a.y()));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    std::uint8_t* row = out.data() + std::size_t(y) * width;
    for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
      const double lo = std::max(std::ceil(crossings[i]), 0.0);
      const double hi = std::min(std::floor(crossings[i + 1]), double(width - 1));
      for (int x = int(lo); x <= int(hi); ++x) row[x] = 1;
    }
  }
  return out;
}

bool point_in_contour(const Contour& contour, const Point2& p) {
  const auto& v = contour.vertices;
  const std::size_t n = v.size();
  if (n == 0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(v[i].cast<double>(), v[(i + 1) % n].cast<double>(), p)) return true;
  }
  if (n < 3) return false;

  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i].cast<double>();
    const Point2 b = v[(i + 1) % n].cast<double>();
    if ((a.y() <= p.y() && p.y() < b.y()) || (b.y() <= p.y() && p.y() < a.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x < p.x()) inside = !inside;
    }
  }
  return inside;
}

Rgb bilinear_sample(const ImageBuffer& image, const Point2& p) {
  const int w = image.width();
  const int h = image.height();
  const double x = std::clamp(p.x(), 0.0, double(w - 1));
  const double y = std::clamp(p.y(), 0.0, double(h - 1));
  const int x0 = int(std::floor(x));
  const int y0 = int(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - fx) * image.channel(x0, y0, c) + fx * image.channel(x1, y0, c);
    const double bottom = (1.0 - fx) * image.channel(x0, y1, c) + fx * image.channel(x1, y1, c);
    const double value = (1.0 - fy) * top + fy * bottom;
    out[c] = std::uint8_t(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
  }
  return out;
}

}  // namespace dragwarp
