#pragma once

// Boundary-guided mask refinement around an external point-prompted segmenter.

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "dragwarp/raster.hpp"

namespace dragwarp {

struct RefineConfig {
  int r1 = 10;
  int point_cap = 128;
};

/// Point-prompted segmentation: image plus positive points in, mask out.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask predict(const ImageBuffer& image, std::span<const Point2> points) = 0;
};

/// Talks to a segmentation service over HTTP (see wire.hpp for the payloads).
class RemoteSegmenter : public Segmenter {
 public:
  explicit RemoteSegmenter(std::string url,
                           std::chrono::milliseconds deadline = std::chrono::milliseconds(5000));
  BinaryMask predict(const ImageBuffer& image, std::span<const Point2> points) override;

 private:
  std::string url_;
  std::chrono::milliseconds deadline_;
};

/// Square grid over the mask's bounding box, anchored at its top-left corner.
/// Uses the smallest pitch that keeps at most cap nodes on set pixels.
std::vector<Point2> sample_grid_points(const BinaryMask& mask, int cap);

/// (predicted AND dilate(user, r1)) OR erode(user, r1).
BinaryMask refine_mask(const BinaryMask& user_mask, const BinaryMask& predicted_mask, int r1);

struct RefineResult {
  BinaryMask mask;
  bool refined = false;
  std::vector<std::string> warnings;
};

/// Never fails on segmenter trouble: any error yields the user mask and a warning.
/// A null segmenter counts as "not configured".
RefineResult refine(const ImageBuffer& image, const BinaryMask& user_mask, Segmenter* segmenter,
                    const RefineConfig& config = {});

}  // namespace dragwarp
