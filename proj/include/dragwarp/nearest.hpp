#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dragwarp/raster.hpp"

namespace dragwarp {

/// Uniform bucket grid over integer points for exact k-nearest queries.
///
/// Distances are Euclidean; equal distances are ordered by the caller-supplied
/// tie key (row-major pixel index for map targets). Queries expand square rings
/// of cells around the query cell and stop once no unvisited cell can hold a
/// point at or below the current k-th distance.
class GridIndex {
 public:
  GridIndex(std::span<const Pixel> points, std::span<const std::int64_t> tie_keys, int cell_size = 8);

  /// Indices into the construction points, nearest first. Returns min(k, size()) entries.
  void nearest(const Pixel& query, int k, std::vector<int>& out) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Candidate {
    std::int64_t dist2;
    std::int64_t tie;
    int index;
    bool operator<(const Candidate& o) const {
      return dist2 != o.dist2 ? dist2 < o.dist2 : tie < o.tie;
    }
  };

  int cell_of(int coord, int origin) const;

  std::vector<Pixel> points_;
  std::vector<std::int64_t> ties_;
  int cell_;
  int origin_x_ = 0;
  int origin_y_ = 0;
  int cells_x_ = 0;
  int cells_y_ = 0;
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
  mutable std::vector<Candidate> heap_;
};

}  // namespace dragwarp
