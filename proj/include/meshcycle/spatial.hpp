#pragma once
// Uniform-grid point index for radius and k-nearest queries in 2-D/3-D.
// Small point sets take a brute-force path; both paths order candidates by
// (squared distance, index), so results are deterministic and match the
// brute-force oracle exactly.

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "meshcycle/tensor.hpp"

namespace mc {

class SpatialIndex {
 public:
  // cell_hint <= 0 picks a cell size from the bounding box and point count.
  explicit SpatialIndex(const ad::Tensor& points, double cell_hint = 0.0);

  std::int64_t size() const { return n_; }

  // Indices with squared distance strictly below r*r, ascending by index.
  std::vector<std::int64_t> radius_query(const double* q, double r) const;

  // k nearest by (squared distance, index); k is capped at the point count.
  void knn(const double* q, int k, std::vector<std::int64_t>& idx,
           std::vector<double>& d2) const;

 private:
  static constexpr std::int64_t kBruteForceLimit = 64;

  const double* pts_;
  ad::Tensor hold_;  // keeps the point buffer alive
  std::int64_t n_;
  int dim_;
  double cell_;
  double origin_[3] = {0, 0, 0};
  std::int64_t grid_dims_[3] = {1, 1, 1};
  std::vector<std::int64_t> cell_start_;  // CSR over flattened cells
  std::vector<std::int64_t> cell_items_;
  bool use_grid_ = false;

  std::int64_t cell_of(const double* p) const;
  double dist2(const double* a, const double* b) const;
};

}  // namespace mc
