#include "dragwarp/nearest.hpp"

#include <algorithm>

#include "dragwarp/errors.hpp"

namespace dragwarp {

GridIndex::GridIndex(std::span<const Pixel> points, std::span<const std::int64_t> tie_keys,
                     int cell_size)
    : points_(points.begin(), points.end()), ties_(tie_keys.begin(), tie_keys.end()), cell_(cell_size) {
  if (cell_size < 1) throw InvalidInput("grid cell size must be >= 1");
  if (points.size() != tie_keys.size()) throw InvalidInput("tie key count mismatch");
  if (points_.empty()) return;

  int max_x = points_[0].x();
  int max_y = points_[0].y();
  origin_x_ = max_x;
  origin_y_ = max_y;
  for (const auto& p : points_) {
    origin_x_ = std::min(origin_x_, p.x());
    origin_y_ = std::min(origin_y_, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }
  cells_x_ = (max_x - origin_x_) / cell_ + 1;
  cells_y_ = (max_y - origin_y_) / cell_ + 1;

  // Counting sort of points into cells.
  cell_start_.assign(std::size_t(cells_x_) * cells_y_ + 1, 0);
  std::vector<int> cell_of_point(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const int c = cell_of(points_[i].y(), origin_y_) * cells_x_ + cell_of(points_[i].x(), origin_x_);
    cell_of_point[i] = c;
    ++cell_start_[c + 1];
  }
  for (std::size_t c = 1; c < cell_start_.size(); ++c) cell_start_[c] += cell_start_[c - 1];
  cell_items_.resize(points_.size());
  std::vector<int> fill = cell_start_;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_items_[fill[cell_of_point[i]]++] = int(i);
  }
}

int GridIndex::cell_of(int coord, int origin) const {
  const int d = coord - origin;
  return d >= 0 ? d / cell_ : -((-d + cell_ - 1) / cell_);
}

void GridIndex::nearest(const Pixel& query, int k, std::vector<int>& out) const {
  out.clear();
  if (points_.empty() || k <= 0) return;
  const std::size_t want = std::min<std::size_t>(std::size_t(k), points_.size());

  const int qx = cell_of(query.x(), origin_x_);
  const int qy = cell_of(query.y(), origin_y_);
  // Ring radius past which every grid cell has been visited.
  const int last_ring = std::max({qx, cells_x_ - 1 - qx, qy, cells_y_ - 1 - qy});

  heap_.clear();
  auto visit_cell = [&](int cx, int cy) {
    if (cx < 0 || cy < 0 || cx >= cells_x_ || cy >= cells_y_) return;
    const int c = cy * cells_x_ + cx;
    for (int j = cell_start_[c]; j < cell_start_[c + 1]; ++j) {
      const int i = cell_items_[j];
      const std::int64_t dx = points_[i].x() - query.x();
      const std::int64_t dy = points_[i].y() - query.y();
      const Candidate cand{dx * dx + dy * dy, ties_[i], i};
      if (heap_.size() < want) {
        heap_.push_back(cand);
        std::push_heap(heap_.begin(), heap_.end());
      } else if (cand < heap_.front()) {
        std::pop_heap(heap_.begin(), heap_.end());
        heap_.back() = cand;
        std::push_heap(heap_.begin(), heap_.end());
      }
    }
  };

  for (int r = 0; r <= last_ring; ++r) {
    if (r == 0) {
      visit_cell(qx, qy);
    } else {
      for (int cx = qx - r; cx <= qx + r; ++cx) {
        visit_cell(cx, qy - r);
        visit_cell(cx, qy + r);
      }
      for (int cy = qy - r + 1; cy <= qy + r - 1; ++cy) {
        visit_cell(qx - r, cy);
        visit_cell(qx + r, cy);
      }
    }
    // Unvisited points lie at distance >= r * cell + 1.
    if (heap_.size() == want) {
      const std::int64_t reach = std::int64_t(r) * cell_;
      if (heap_.front().dist2 <= reach * reach) break;
    }
  }

  std::sort_heap(heap_.begin(), heap_.end());
  out.reserve(heap_.size());
  for (const auto& c : heap_) out.push_back(c.index);
}

}  // namespace dragwarp
