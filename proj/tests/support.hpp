#pragma once

// Random case generators and brute-force oracles shared by the test binaries.
// Oracles here deliberately avoid the library's fast paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include "dragwarp/raster.hpp"
#include "dragwarp/warp.hpp"

namespace dragwarp::testing {

using Rng = std::mt19937_64;

inline ImageBuffer random_image(Rng& rng, int w, int h) {
  std::uniform_int_distribution<int> byte(0, 255);
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, Rgb(std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))));
  return img;
}

/// Smooth-ish image: random plane plus low-frequency ripples, so bilinear
/// differences stay small but nonzero.
inline ImageBuffer smooth_image(Rng& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(w, h);
  double a[3], b[3], c[3], f[3];
  for (int k = 0; k < 3; ++k) {
    a[k] = 40 + 100 * u(rng);
    b[k] = 2 * u(rng) - 1;
    c[k] = 2 * u(rng) - 1;
    f[k] = 0.05 + 0.3 * u(rng);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Rgb px;
      for (int k = 0; k < 3; ++k) {
        const double v = a[k] + b[k] * x + c[k] * y + 30 * std::sin(f[k] * x) * std::cos(f[k] * y);
        px[k] = std::uint8_t(std::clamp(v, 0.0, 255.0));
      }
      img.set(x, y, px);
    }
  return img;
}

inline BinaryMask random_bits(Rng& rng, int w, int h, double density) {
  std::bernoulli_distribution bit(density);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  return m;
}

/// Union of 1..max_blobs random ellipses.
inline BinaryMask random_blobs(Rng& rng, int w, int h, int max_blobs = 3, double min_r = 2.0,
                               double max_r = 0.0) {
  if (max_r <= 0.0) max_r = std::max(3.0, std::min(w, h) / 4.0);
  std::uniform_int_distribution<int> count(1, max_blobs);
  std::uniform_real_distribution<double> cx(0, w - 1), cy(0, h - 1), rad(min_r, max_r), ang(0, M_PI);
  BinaryMask m(w, h);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double px = cx(rng), py = cy(rng), ra = rad(rng), rb = rad(rng), t = ang(rng);
    const double ct = std::cos(t), st = std::sin(t);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = x - px, dy = y - py;
        const double u = (dx * ct + dy * st) / ra, v = (-dx * st + dy * ct) / rb;
        if (u * u + v * v <= 1.0) m.set(x, y);
      }
  }
  return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x)
      if (x >= 0 && y >= 0 && x < w && y < h) m.set(x, y);
  return m;
}

/// Morphology by definition: loop over every disc offset.
inline BinaryMask brute_morph(const BinaryMask& m, int r, bool is_dilate) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool any = false, all = true;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) {
          if (i * i + j * j > r * r) continue;
          const bool v = m.contains(x + i, y + j);
          any = any || v;
          all = all && v;
        }
      out.set(x, y, is_dilate ? any : all);
    }
  return out;
}

/// Per-pixel crossing-number test on integer points, including boundary lattice points.
inline bool brute_point_in_polygon(const std::vector<Pixel>& v, long px, long py) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel& a = v[i];
    const Pixel& b = v[(i + 1) % n];
    const long cross = long(b.x() - a.x()) * (py - a.y()) - long(b.y() - a.y()) * (px - a.x());
    if (cross == 0 && px >= std::min(a.x(), b.x()) && px <= std::max(a.x(), b.x()) &&
        py >= std::min(a.y(), b.y()) && py <= std::max(a.y(), b.y()))
      return true;
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel& a = v[i];
    const Pixel& b = v[(i + 1) % n];
    if ((a.y() <= py && py < b.y()) || (b.y() <= py && py < a.y())) {
      // x_cross < px  <=>  a.x*(dy) + (py-a.y)*(dx) < px*dy, sign-corrected for dy.
      const long dy = b.y() - a.y();
      const long lhs = long(a.x()) * dy + (py - a.y()) * long(b.x() - a.x());
      const long rhs = px * dy;
      if (dy > 0 ? lhs < rhs : lhs > rhs) inside = !inside;
    }
  }
  return inside;
}

inline BinaryMask brute_fill(const Contour& c, int w, int h) {
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, brute_point_in_polygon(c.vertices, x, y));
  return out;
}

/// 8-connected component labels (0 = background), numbered in raster order of first pixel.
inline std::vector<int> label_components(const BinaryMask& m, int& count) {
  const int w = m.width(), h = m.height();
  std::vector<int> label(std::size_t(w) * h, 0);
  count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(x, y) || label[std::size_t(y) * w + x]) continue;
      ++count;
      std::queue<Pixel> q;
      q.push(Pixel(x, y));
      label[std::size_t(y) * w + x] = count;
      while (!q.empty()) {
        const Pixel p = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x() + dx, ny = p.y() + dy;
            if (!m.contains(nx, ny) || label[std::size_t(ny) * w + nx]) continue;
            label[std::size_t(ny) * w + nx] = count;
            q.push(Pixel(nx, ny));
          }
      }
    }
  return label;
}

/// Fills holes: background pixels not 4-connected to the image border become set.
inline BinaryMask fill_holes(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> outside(std::size_t(w) * h, 0);
  std::queue<Pixel> q;
  auto seed = [&](int x, int y) {
    if (!m(x, y) && !outside[std::size_t(y) * w + x]) {
      outside[std::size_t(y) * w + x] = 1;
      q.push(Pixel(x, y));
    }
  };
  for (int x = 0; x < w; ++x) { seed(x, 0); seed(x, h - 1); }
  for (int y = 0; y < h; ++y) { seed(0, y); seed(w - 1, y); }
  const int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!q.empty()) {
    const Pixel p = q.front();
    q.pop();
    for (const auto& d : d4) {
      const int nx = p.x() + d[0], ny = p.y() + d[1];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      if (m(nx, ny) || outside[std::size_t(ny) * w + nx]) continue;
      outside[std::size_t(ny) * w + nx] = 1;
      q.push(Pixel(nx, ny));
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, !outside[std::size_t(y) * w + x]);
  return out;
}

inline BinaryMask shifted(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y) && m.contains(x, y) && x + dx >= 0 && y + dy >= 0 && x + dx < m.width() && y + dy < m.height())
        out.set(x + dx, y + dy);
  return out;
}

/// Pixels of `region` with no entry in `map`.
inline long count_gaps(const BinaryMask& region, const PixelMap& map) {
  BinaryMask covered(region.width(), region.height());
  for (const auto& e : map.entries) covered.set(e.target.x(), e.target.y());
  return minus(region, covered).count();
}

/// Random handle inside `mask` (requires a non-empty mask).
inline Point2 random_pixel_in(Rng& rng, const BinaryMask& mask) {
  std::vector<Pixel> set;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) set.emplace_back(x, y);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  return set[pick(rng)].cast<double>();
}

}  // namespace dragwarp::testing
