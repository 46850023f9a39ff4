#include "meshcycle/mesh.hpp"

#include <string>

#include "meshcycle/common.hpp"

namespace mc {

void Mesh::validate() const {
  const std::int64_t n = num_nodes();
  if (positions.ndim() != 2) throw StructuralError("mesh: positions must be N x D");
  const int d = dim();
  if (d != 2 && d != 3) throw StructuralError("mesh: dimension must be 2 or 3");
  if (simplex_size != d + 1)
    throw StructuralError("mesh: simplex size must be D+1, got " + std::to_string(simplex_size));
  if (static_cast<std::int64_t>(cells.size()) % simplex_size != 0)
    throw StructuralError("mesh: cell list length not divisible by simplex size");
  if (static_cast<std::int64_t>(node_type.size()) != n)
    throw StructuralError("mesh: node_type length mismatch");

  for (std::int64_t c = 0; c < num_cells(); ++c) {
    const std::int64_t* cell = cells.data() + c * simplex_size;
    for (int i = 0; i < simplex_size; ++i) {
      if (cell[i] < 0 || cell[i] >= n)
        throw StructuralError("mesh: cell index out of range in cell " + std::to_string(c));
      for (int j = i + 1; j < simplex_size; ++j)
        if (cell[i] == cell[j])
          throw StructuralError("mesh: degenerate cell " + std::to_string(c));
    }
  }
  for (auto t : node_type)
    if (t < 0 || t >= kNodeTypeCount)
      throw StructuralError("mesh: node type out of range: " + std::to_string(t));
}

}  // namespace mc
