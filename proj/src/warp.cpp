#include "dragwarp/warp.hpp"

#include <algorithm>
#include <cmath>

#include "dragwarp/errors.hpp"
#include "dragwarp/nearest.hpp"

namespace dragwarp {

namespace {

constexpr int kGridCell = 8;

// Values within this distance below a half-integer round as the half-integer,
// so symmetric handle layouts do not depend on floating-point summation order.
constexpr double kHalfSnap = 1e-9;

int round_half_up(double v) { return int(std::floor(v + 0.5 + kHalfSnap)); }

bool in_bounds(const Point2& p, int width, int height) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < double(width) && p.y() < double(height);
}

bool in_bounds(const Pixel& p, int width, int height) {
  return p.x() >= 0 && p.y() >= 0 && p.x() < width && p.y() < height;
}

/// IDW blend of per-anchor offsets; reuses its weight buffer across calls.
class OffsetField {
 public:
  OffsetField(std::vector<Point2> anchors, std::vector<Point2> offsets, double epsilon)
      : anchors_(std::move(anchors)), offsets_(std::move(offsets)), weights_(anchors_.size()),
        epsilon_(epsilon) {}

  Point2 at(const Point2& p) {
    idw_weights_into<double>(p, anchors_, epsilon_, weights_);
    Point2 sum = Point2::Zero();
    for (std::size_t i = 0; i < anchors_.size(); ++i) sum += weights_[i] * offsets_[i];
    return sum;
  }

 private:
  std::vector<Point2> anchors_;
  std::vector<Point2> offsets_;
  std::vector<double> weights_;
  double epsilon_;
};

OffsetField handle_field(std::span<const ControlPair> pairs, double epsilon) {
  std::vector<Point2> anchors;
  std::vector<Point2> offsets;
  anchors.reserve(pairs.size());
  offsets.reserve(pairs.size());
  for (const auto& pair : pairs) {
    anchors.push_back(pair.handle);
    offsets.push_back(pair.target - pair.handle);
  }
  return OffsetField(std::move(anchors), std::move(offsets), epsilon);
}

}  // namespace

Association associate_control_points(const std::vector<Contour>& contours,
                                     const std::vector<ControlPair>& pairs, int width, int height) {
  Association result;
  result.bindings.reserve(contours.size());
  for (const auto& contour : contours) {
    result.bindings.push_back(RegionBinding{contour, {}, fill_contour(contour, width, height)});
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    bool bound = false;
    for (auto& binding : result.bindings) {
      if (point_in_contour(binding.contour, pairs[i].handle)) {
        binding.pairs.push_back(pairs[i]);
        bound = true;
        break;
      }
    }
    if (!bound) {
      result.rejected.push_back(pairs[i]);
      result.rejected_indices.push_back(int(i));
    }
  }
  return result;
}

Point2 forward_displacement(std::span<const ControlPair> pairs, const Point2& p, double epsilon) {
  if (pairs.empty()) return Point2::Zero();
  return handle_field(pairs, epsilon).at(p);
}

ForwardResult forward_warp(const RegionBinding& binding, double epsilon) {
  if (binding.pairs.empty()) throw InvalidInput("forward_warp needs at least one control pair");
  const int w = binding.region_pixels.width();
  const int h = binding.region_pixels.height();
  OffsetField field = handle_field(binding.pairs, epsilon);

  ForwardResult result;
  result.map.width = w;
  result.map.height = h;

  for (const auto& v : binding.contour.vertices) {
    const Point2 moved = v.cast<double>() + field.at(v.cast<double>());
    const Pixel rounded(round_half_up(moved.x()), round_half_up(moved.y()));
    auto& out = result.warped_contour.vertices;
    if (out.empty() || out.back() != rounded) out.push_back(rounded);
  }
  auto& cv = result.warped_contour.vertices;
  while (cv.size() > 1 && cv.front() == cv.back()) cv.pop_back();
  result.warped_contour.id = binding.contour.id;

  // Collisions keep the smaller displacement; strict comparison keeps the
  // earlier row-major source on ties.
  struct Candidate {
    Point2 source;
    Pixel target;
    double magnitude2;
  };
  std::vector<Candidate> candidates;
  std::vector<int> owner(std::size_t(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!binding.region_pixels(x, y)) continue;
      const Point2 p(x, y);
      const Point2 d = field.at(p);
      const Pixel t(round_half_up(p.x() + d.x()), round_half_up(p.y() + d.y()));
      if (!in_bounds(t, w, h)) continue;
      const int slot = int(candidates.size());
      candidates.push_back({p, t, d.squaredNorm()});
      int& current = owner[std::size_t(t.y()) * w + t.x()];
      if (current < 0 || candidates[slot].magnitude2 < candidates[current].magnitude2) {
        current = slot;
      }
    }
  }

  result.map.entries.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (owner[std::size_t(c.target.y()) * w + c.target.x()] == int(i)) {
      result.map.entries.push_back({c.source, c.target, MapOrigin::forward});
    }
  }
  return result;
}

PixelMap backward_map(const Contour& warped_contour, const PixelMap& partial_map, int n_neighbors,
                      double epsilon) {
  if (n_neighbors < 1) throw InvalidInput("backward mapping needs n_neighbors >= 1");
  const int w = partial_map.width;
  const int h = partial_map.height;
  PixelMap result = partial_map;
  if (partial_map.entries.empty()) return result;

  const std::size_t n = partial_map.entries.size();
  std::vector<Pixel> targets(n);
  std::vector<std::int64_t> ties(n);
  std::vector<std::uint8_t> covered(std::size_t(w) * h, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = partial_map.entries[i];
    targets[i] = e.target;
    ties[i] = std::int64_t(e.target.y()) * w + e.target.x();
    covered[std::size_t(ties[i])] = 1;
  }
  const GridIndex index(targets, ties, kGridCell);

  const BinaryMask region = fill_contour(warped_contour, w, h);
  std::vector<int> nearest;
  std::vector<Point2> anchors;
  std::vector<double> weights;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!region(x, y) || covered[std::size_t(y) * w + x]) continue;
      const Pixel pt(x, y);
      index.nearest(pt, n_neighbors, nearest);

      anchors.clear();
      for (int i : nearest) anchors.push_back(targets[i].cast<double>());
      weights.resize(anchors.size());
      const Point2 p(x, y);
      idw_weights_into<double>(p, anchors, epsilon, weights);
      Point2 source = p;
      for (std::size_t j = 0; j < nearest.size(); ++j) {
        const auto& e = partial_map.entries[nearest[j]];
        source += weights[j] * (e.source - e.target.cast<double>());
      }
      // Sources pulled outside the image are projected onto its border, the
      // same place the sampler would read from, so the target is never dropped.
      if (!in_bounds(source, w, h)) {
        source = source.cwiseMax(Point2::Zero()).cwiseMin(Point2(w - 1, h - 1));
      }
      result.entries.push_back({source, pt, MapOrigin::backward});
    }
  }
  return result;
}

BinaryMask compute_inpaint_mask(const BinaryMask& original_mask, const BinaryMask& warped_mask, int r2) {
  if (!original_mask.same_shape(warped_mask)) throw InvalidInput("mask dimension mismatch");
  if (r2 < 0) throw InvalidInput("r2 must be >= 0");
  return dilate(minus(original_mask, warped_mask) | boundary(warped_mask), r2);
}

WarpOutput render_warp(const ImageBuffer& image, const BinaryMask& mask,
                       const std::vector<ControlPair>& pairs, const WarpConfig& config) {
  const int w = image.width();
  const int h = image.height();
  if (mask.width() != w || mask.height() != h) {
    throw InvalidInput("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                       " but image is " + std::to_string(w) + "x" + std::to_string(h));
  }
  if (!(config.epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (config.neighbors < 1) throw InvalidInput("neighbors must be >= 1");
  if (config.r2 < 0) throw InvalidInput("r2 must be >= 0");

  const Association association = associate_control_points(find_contours(mask), pairs, w, h);

  WarpOutput out{image, BinaryMask(w, h), BinaryMask(w, h), PixelMap{w, h, {}}, {}, association.rejected_indices, {}};
  BinaryMask moved_regions(w, h);
  std::vector<int> entry_of_target(std::size_t(w) * h, -1);
  std::vector<MapEntry> entries;

  for (const auto& binding : association.bindings) {
    if (binding.pairs.empty()) continue;
    moved_regions = moved_regions | binding.region_pixels;

    const ForwardResult forward = forward_warp(binding, config.epsilon);
    const PixelMap full = backward_map(forward.warped_contour, forward.map, config.neighbors, config.epsilon);

    std::vector<std::uint8_t> mapped(std::size_t(w) * h, 0);
    for (const auto& e : full.entries) {
      const std::size_t t = std::size_t(e.target.y()) * w + e.target.x();
      mapped[t] = 1;
      out.warped.set(e.target.x(), e.target.y(), bilinear_sample(image, e.source));
      out.warped_mask.set(e.target.x(), e.target.y());
      if (entry_of_target[t] < 0) {
        entry_of_target[t] = int(entries.size());
        entries.push_back(e);
      } else {
        entries[entry_of_target[t]] = e;
      }
      ++(e.origin == MapOrigin::forward ? out.stats.forward_entries : out.stats.backward_entries);
    }

    const BinaryMask target_region = fill_contour(forward.warped_contour, w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!target_region(x, y)) continue;
        ++out.stats.target_pixels;
        if (mapped[std::size_t(y) * w + x]) ++out.stats.mapped_pixels;
      }
    }
    out.warped_contours.push_back(forward.warped_contour);
  }

  out.map.entries.reserve(entries.size());
  for (int t : entry_of_target) {
    if (t >= 0) out.map.entries.push_back(entries[t]);
  }
  out.inpaint_mask = compute_inpaint_mask(mask & moved_regions, out.warped_mask, config.r2);
  return out;
}

}  // namespace dragwarp
