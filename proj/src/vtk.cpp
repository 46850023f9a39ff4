#include "meshcycle/vtk.hpp"

#include <cstdio>

#include "meshcycle/common.hpp"

namespace mc {

void write_vtk_frame(const std::string& path, const Mesh& mesh, const ad::Tensor& fields,
                     const std::vector<std::string>& field_names) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw StructuralError("cannot open for writing: " + path);
  const std::int64_t n = mesh.num_nodes();
  const std::int64_t c = mesh.num_cells();
  const int d = mesh.dim();

  std::fprintf(f, "# vtk DataFile Version 3.0\nmesh frame\nASCII\nDATASET UNSTRUCTURED_GRID\n");
  std::fprintf(f, "POINTS %lld double\n", static_cast<long long>(n));
  auto p = mesh.positions.data();
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = d == 3 ? p[i * d + 2] : 0.0;
    std::fprintf(f, "%.17g %.17g %.17g\n", p[i * d], p[i * d + 1], z);
  }
  std::fprintf(f, "CELLS %lld %lld\n", static_cast<long long>(c),
               static_cast<long long>(c * (mesh.simplex_size + 1)));
  for (std::int64_t i = 0; i < c; ++i) {
    std::fprintf(f, "%d", mesh.simplex_size);
    for (int j = 0; j < mesh.simplex_size; ++j)
      std::fprintf(f, " %lld", static_cast<long long>(mesh.cells[i * mesh.simplex_size + j]));
    std::fputc('\n', f);
  }
  std::fprintf(f, "CELL_TYPES %lld\n", static_cast<long long>(c));
  const int vtk_type = mesh.simplex_size == 3 ? 5 : 10;  // triangle or tetrahedron
  for (std::int64_t i = 0; i < c; ++i) std::fprintf(f, "%d\n", vtk_type);

  std::fprintf(f, "POINT_DATA %lld\n", static_cast<long long>(n));
  std::fprintf(f, "SCALARS node_type int 1\nLOOKUP_TABLE default\n");
  for (std::int64_t i = 0; i < n; ++i)
    std::fprintf(f, "%d\n", mesh.node_type[static_cast<std::size_t>(i)]);
  for (std::size_t fc = 0; fc < field_names.size(); ++fc) {
    std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", field_names[fc].c_str());
    for (std::int64_t i = 0; i < n; ++i)
      std::fprintf(f, "%.17g\n", fields.at(i, static_cast<std::int64_t>(fc)));
  }
  std::fclose(f);
}

void write_csv_frame(const std::string& path, const Mesh& mesh, const ad::Tensor& fields,
                     const std::vector<std::string>& field_names) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw StructuralError("cannot open for writing: " + path);
  const int d = mesh.dim();
  std::fprintf(f, "node,x,y%s,type", d == 3 ? ",z" : "");
  for (const auto& name : field_names) std::fprintf(f, ",%s", name.c_str());
  std::fputc('\n', f);
  auto p = mesh.positions.data();
  for (std::int64_t i = 0; i < mesh.num_nodes(); ++i) {
    std::fprintf(f, "%lld,%.17g,%.17g", static_cast<long long>(i), p[i * d], p[i * d + 1]);
    if (d == 3) std::fprintf(f, ",%.17g", p[i * d + 2]);
    std::fprintf(f, ",%d", mesh.node_type[static_cast<std::size_t>(i)]);
    for (std::size_t fc = 0; fc < field_names.size(); ++fc)
      std::fprintf(f, ",%.17g", fields.at(i, static_cast<std::int64_t>(fc)));
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace mc
