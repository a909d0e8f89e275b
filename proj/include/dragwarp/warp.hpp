#pragma once

// Bidirectional region warping: control points are bound to mask regions,
// each region is pushed forward by an inverse-distance-weighted displacement
// field, and every pixel of the warped outline that the forward pass missed is
// pulled back from its nearest forward correspondences.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dragwarp/raster.hpp"

namespace dragwarp {

struct ControlPair {
  Point2 handle;
  Point2 target;
};

/// One mask region and the control pairs whose handle it contains.
struct RegionBinding {
  Contour contour;
  std::vector<ControlPair> pairs;
  BinaryMask region_pixels;
};

struct Association {
  std::vector<RegionBinding> bindings;
  std::vector<ControlPair> rejected;
  /// Positions of the rejected pairs in the input list.
  std::vector<int> rejected_indices;
};

enum class MapOrigin { forward, backward };

struct MapEntry {
  Point2 source;
  Pixel target;
  MapOrigin origin;
};

/// Source -> target correspondences; each target appears at most once and
/// every entry lies inside the width x height raster.
struct PixelMap {
  int width = 0;
  int height = 0;
  std::vector<MapEntry> entries;
};

struct WarpConfig {
  double epsilon = 1e-6;
  int neighbors = 4;
  int r2 = 5;
};

struct WarpStats {
  /// In-bounds pixels of the filled warped contours of all moved regions.
  std::size_t target_pixels = 0;
  /// How many of those received a map entry.
  std::size_t mapped_pixels = 0;
  std::size_t forward_entries = 0;
  std::size_t backward_entries = 0;
};

struct WarpOutput {
  ImageBuffer warped;
  BinaryMask warped_mask;
  BinaryMask inpaint_mask;
  /// Combined map, sorted by target in row-major order.
  PixelMap map;
  std::vector<Contour> warped_contours;
  std::vector<int> rejected_pair_indices;
  WarpStats stats;
};

struct ForwardResult {
  Contour warped_contour;
  PixelMap map;
};

/// Normalized inverse-distance weights 1 / (|p - a_i| + epsilon).
template <typename Scalar>
void idw_weights_into(const Eigen::Matrix<Scalar, 2, 1>& p,
                      std::span<const Eigen::Matrix<Scalar, 2, 1>> anchors, Scalar epsilon,
                      std::span<Scalar> out) {
  Scalar total(0);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    out[i] = Scalar(1) / ((p - anchors[i]).norm() + epsilon);
    total += out[i];
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) out[i] /= total;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> idw_weights(
    const Eigen::Matrix<Scalar, 2, 1>& p, std::span<const Eigen::Matrix<Scalar, 2, 1>> anchors,
    Scalar epsilon) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(Eigen::Index(anchors.size()));
  idw_weights_into<Scalar>(p, anchors, epsilon, std::span<Scalar>(w.data(), anchors.size()));
  return w;
}

/// Binds each pair to the first contour (extraction order) containing its handle.
Association associate_control_points(const std::vector<Contour>& contours,
                                     const std::vector<ControlPair>& pairs, int width, int height);

/// Sub-pixel displacement sum_i w_i (t_i - h_i) at p, weights anchored at the handles.
Point2 forward_displacement(std::span<const ControlPair> pairs, const Point2& p, double epsilon);

/// Pushes every pixel of the filled region through the displacement field.
/// Requires at least one pair.
ForwardResult forward_warp(const RegionBinding& binding, double epsilon = 1e-6);

/// Adds a pulled-back entry for each in-bounds pixel of the filled warped
/// contour that the forward map left empty.
PixelMap backward_map(const Contour& warped_contour, const PixelMap& partial_map, int n_neighbors = 4,
                      double epsilon = 1e-6);

/// dilate((original AND NOT warped) OR boundary(warped), r2).
BinaryMask compute_inpaint_mask(const BinaryMask& original_mask, const BinaryMask& warped_mask, int r2);

/// Full warp of image under mask and pairs.
WarpOutput render_warp(const ImageBuffer& image, const BinaryMask& mask,
                       const std::vector<ControlPair>& pairs, const WarpConfig& config = {});

}  // namespace dragwarp
