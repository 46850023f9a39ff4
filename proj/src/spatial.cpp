#include "meshcycle/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "meshcycle/common.hpp"

namespace mc {

SpatialIndex::SpatialIndex(const ad::Tensor& points, double cell_hint)
    : pts_(points.data().data()),
      hold_(points),
      n_(points.rows()),
      dim_(static_cast<int>(points.cols())) {
  if (dim_ != 2 && dim_ != 3) throw StructuralError("spatial index: dimension must be 2 or 3");
  if (n_ <= kBruteForceLimit) return;

  double lo[3] = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::max()};
  double hi[3] = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
                  std::numeric_limits<double>::lowest()};
  for (std::int64_t i = 0; i < n_; ++i)
    for (int d = 0; d < dim_; ++d) {
      lo[d] = std::min(lo[d], pts_[i * dim_ + d]);
      hi[d] = std::max(hi[d], pts_[i * dim_ + d]);
    }
  double extent = 0.0;
  for (int d = 0; d < dim_; ++d) extent = std::max(extent, hi[d] - lo[d]);
  if (extent <= 0.0) extent = 1.0;

  cell_ = cell_hint > 0.0
              ? cell_hint
              : extent / std::max(1.0, std::floor(std::pow(static_cast<double>(n_),
                                                           1.0 / dim_)));
  std::int64_t total = 1;
  for (int d = 0; d < dim_; ++d) {
    origin_[d] = lo[d];
    grid_dims_[d] =
        std::max<std::int64_t>(1, static_cast<std::int64_t>((hi[d] - lo[d]) / cell_) + 1);
    total *= grid_dims_[d];
  }
  if (total > 8 * n_) {
    // degenerate spread; widen cells to keep the table dense
    cell_ = extent / std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                                   std::cbrt(static_cast<double>(n_))));
    total = 1;
    for (int d = 0; d < dim_; ++d) {
      grid_dims_[d] =
          std::max<std::int64_t>(1, static_cast<std::int64_t>((hi[d] - origin_[d]) / cell_) + 1);
      total *= grid_dims_[d];
    }
  }

  std::vector<std::int64_t> counts(static_cast<std::size_t>(total) + 1, 0);
  std::vector<std::int64_t> cell_idx(static_cast<std::size_t>(n_));
  for (std::int64_t i = 0; i < n_; ++i) {
    cell_idx[i] = cell_of(pts_ + i * dim_);
    ++counts[cell_idx[i] + 1];
  }
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  cell_start_ = counts;
  cell_items_.resize(static_cast<std::size_t>(n_));
  std::vector<std::int64_t> cursor(counts.begin(), counts.end() - 1);
  for (std::int64_t i = 0; i < n_; ++i) cell_items_[cursor[cell_idx[i]]++] = i;
  use_grid_ = true;
}

std::int64_t SpatialIndex::cell_of(const double* p) const {
  std::int64_t idx = 0;
  for (int d = 0; d < dim_; ++d) {
    auto c = static_cast<std::int64_t>((p[d] - origin_[d]) / cell_);
    c = std::clamp<std::int64_t>(c, 0, grid_dims_[d] - 1);
    idx = idx * grid_dims_[d] + c;
  }
  return idx;
}

double SpatialIndex::dist2(const double* a, const double* b) const {
  double s = 0.0;
  for (int d = 0; d < dim_; ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

std::vector<std::int64_t> SpatialIndex::radius_query(const double* q, double r) const {
  std::vector<std::int64_t> out;
  const double r2 = r * r;
  if (!use_grid_) {
    for (std::int64_t i = 0; i < n_; ++i)
      if (dist2(q, pts_ + i * dim_) < r2) out.push_back(i);
    return out;
  }
  std::int64_t clo[3] = {0, 0, 0}, chi[3] = {0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    clo[d] = std::clamp<std::int64_t>(
        static_cast<std::int64_t>((q[d] - r - origin_[d]) / cell_), 0, grid_dims_[d] - 1);
    chi[d] = std::clamp<std::int64_t>(
        static_cast<std::int64_t>((q[d] + r - origin_[d]) / cell_), 0, grid_dims_[d] - 1);
  }
  const std::int64_t zlo = dim_ == 3 ? clo[2] : 0;
  const std::int64_t zhi = dim_ == 3 ? chi[2] : 0;
  for (std::int64_t x = clo[0]; x <= chi[0]; ++x)
    for (std::int64_t y = clo[1]; y <= chi[1]; ++y)
      for (std::int64_t z = zlo; z <= zhi; ++z) {
        std::int64_t c = dim_ == 3 ? (x * grid_dims_[1] + y) * grid_dims_[2] + z
                                   : x * grid_dims_[1] + y;
        for (std::int64_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
          std::int64_t i = cell_items_[k];
          if (dist2(q, pts_ + i * dim_) < r2) out.push_back(i);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::knn(const double* q, int k, std::vector<std::int64_t>& idx,
                       std::vector<double>& d2) const {
  k = static_cast<int>(std::min<std::int64_t>(k, n_));
  idx.clear();
  d2.clear();
  if (k <= 0) return;

  using Cand = std::pair<double, std::int64_t>;  // (d2, index); max-heap keeps worst on top
  std::priority_queue<Cand> heap;
  auto offer = [&](std::int64_t i) {
    Cand c{dist2(q, pts_ + i * dim_), i};
    if (static_cast<int>(heap.size()) < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  if (!use_grid_) {
    for (std::int64_t i = 0; i < n_; ++i) offer(i);
  } else {
    // expanding ring of cells around the query until the worst kept distance
    // is covered by the searched radius
    std::int64_t qc[3] = {0, 0, 0};
    for (int d = 0; d < dim_; ++d)
      qc[d] = std::clamp<std::int64_t>(
          static_cast<std::int64_t>((q[d] - origin_[d]) / cell_), 0, grid_dims_[d] - 1);
    std::int64_t max_ring = 0;
    for (int d = 0; d < dim_; ++d)
      max_ring = std::max(max_ring, std::max(qc[d], grid_dims_[d] - 1 - qc[d]));

    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
      bool any_cell = false;
      std::int64_t zlo = dim_ == 3 ? std::max<std::int64_t>(0, qc[2] - ring) : 0;
      std::int64_t zhi = dim_ == 3 ? std::min(grid_dims_[2] - 1, qc[2] + ring) : 0;
      for (std::int64_t x = std::max<std::int64_t>(0, qc[0] - ring);
           x <= std::min(grid_dims_[0] - 1, qc[0] + ring); ++x)
        for (std::int64_t y = std::max<std::int64_t>(0, qc[1] - ring);
             y <= std::min(grid_dims_[1] - 1, qc[1] + ring); ++y)
          for (std::int64_t z = zlo; z <= zhi; ++z) {
            std::int64_t cheb = std::max(std::abs(x - qc[0]), std::abs(y - qc[1]));
            if (dim_ == 3) cheb = std::max(cheb, std::abs(z - qc[2]));
            if (cheb != ring) continue;  // shell only; inner cells already visited
            any_cell = true;
            std::int64_t c = dim_ == 3 ? (x * grid_dims_[1] + y) * grid_dims_[2] + z
                                       : x * grid_dims_[1] + y;
            for (std::int64_t e = cell_start_[c]; e < cell_start_[c + 1]; ++e)
              offer(cell_items_[e]);
          }
      (void)any_cell;
      if (static_cast<int>(heap.size()) == k) {
        // Unsearched cells have Chebyshev distance > ring, so their points sit
        // at least ring*cell away. Strict inequality keeps boundary ties
        // resolving exactly like the brute-force scan.
        double covered = static_cast<double>(ring) * cell_;
        if (heap.top().first < covered * covered) break;
      }
    }
  }

  std::vector<Cand> result;
  result.reserve(heap.size());
  while (!heap.empty()) {
    result.push_back(heap.top());
    heap.pop();
  }
  std::sort(result.begin(), result.end());
  for (const auto& [dd, i] : result) {
    idx.push_back(i);
    d2.push_back(dd);
  }
}

}  // namespace mc
