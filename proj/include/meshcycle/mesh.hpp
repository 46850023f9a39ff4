#pragma once

#include <cstdint>
#include <vector>

#include "meshcycle/tensor.hpp"

namespace mc {

enum class NodeType : std::int32_t {
  kFluid = 0,
  kWall = 1,
  kInflow = 2,
  kOutflow = 3,
  kObstacle = 4,
};
inline constexpr int kNodeTypeCount = 5;

// Boundary nodes carry Dirichlet data and are excluded from the loss; dynamic
// nodes evolve under the model.
inline bool is_boundary(std::int32_t type) {
  return type == static_cast<std::int32_t>(NodeType::kWall) ||
         type == static_cast<std::int32_t>(NodeType::kInflow) ||
         type == static_cast<std::int32_t>(NodeType::kObstacle);
}

struct Mesh {
  ad::Tensor positions;            // N x D mesh-space coordinates
  std::vector<std::int64_t> cells;  // flattened simplices, simplex_size indices each
  int simplex_size = 3;             // D + 1
  std::vector<std::int32_t> node_type;

  std::int64_t num_nodes() const { return positions.rows(); }
  int dim() const { return static_cast<int>(positions.cols()); }
  std::int64_t num_cells() const {
    return simplex_size > 0 ? static_cast<std::int64_t>(cells.size()) / simplex_size : 0;
  }

  // Checks index ranges, degenerate cells, and node-type values.
  void validate() const;
};

}  // namespace mc
