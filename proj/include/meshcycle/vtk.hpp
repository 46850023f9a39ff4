#pragma once
// Minimal legacy-VTK unstructured-grid writer plus a flat CSV field export
// for external visualization.

#include <string>

#include "meshcycle/synthdata.hpp"

namespace mc {

// One frame as an ASCII legacy VTK file (triangles or tets, point scalars).
void write_vtk_frame(const std::string& path, const Mesh& mesh, const ad::Tensor& fields,
                     const std::vector<std::string>& field_names);

// node id, position, type, and field columns for one frame.
void write_csv_frame(const std::string& path, const Mesh& mesh, const ad::Tensor& fields,
                     const std::vector<std::string>& field_names);

}  // namespace mc
