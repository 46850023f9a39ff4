#include "meshcycle/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "meshcycle/common.hpp"
#include "meshcycle/spatial.hpp"

namespace mc {

namespace {

struct EdgeRec {
  std::int64_t r, s;
  std::uint8_t world;
  bool operator<(const EdgeRec& o) const { return std::tie(r, s) < std::tie(o.r, o.s); }
  bool operator==(const EdgeRec& o) const { return r == o.r && s == o.s; }
};

Graph from_records(std::int64_t num_nodes, std::vector<EdgeRec> recs, bool keep_flags) {
  std::sort(recs.begin(), recs.end());
  recs.erase(std::unique(recs.begin(), recs.end()), recs.end());
  Graph g;
  g.num_nodes = num_nodes;
  g.senders.reserve(recs.size());
  g.receivers.reserve(recs.size());
  if (keep_flags) g.world_flag.reserve(recs.size());
  for (const auto& e : recs) {
    g.receivers.push_back(e.r);
    g.senders.push_back(e.s);
    if (keep_flags) g.world_flag.push_back(e.world);
  }
  return g;
}

}  // namespace

void Graph::validate() const {
  if (!world_flag.empty() && static_cast<std::int64_t>(world_flag.size()) != num_edges())
    throw StructuralError("graph: world flag length mismatch");
  for (std::int64_t k = 0; k < num_edges(); ++k) {
    if (senders[k] < 0 || senders[k] >= num_nodes || receivers[k] < 0 ||
        receivers[k] >= num_nodes)
      throw StructuralError("graph: edge index out of range");
    if (senders[k] == receivers[k]) throw StructuralError("graph: self-loop");
    if (k > 0 && std::tie(receivers[k - 1], senders[k - 1]) >=
                     std::tie(receivers[k], senders[k]))
      throw StructuralError("graph: edges not in canonical order or duplicated");
  }
  // reverse of every directed edge must be present
  for (std::int64_t k = 0; k < num_edges(); ++k) {
    auto lo = std::lower_bound(
        receivers.begin(), receivers.end(), senders[k]);
    bool found = false;
    for (auto it = lo; it != receivers.end() && *it == senders[k]; ++it) {
      std::int64_t pos = it - receivers.begin();
      if (senders[pos] == receivers[k]) {
        found = true;
        break;
      }
    }
    if (!found) throw StructuralError("graph: missing reverse edge");
  }
}

Graph build_graph(const Mesh& mesh) {
  mesh.validate();
  std::vector<EdgeRec> recs;
  recs.reserve(mesh.num_cells() * mesh.simplex_size * (mesh.simplex_size - 1));
  for (std::int64_t c = 0; c < mesh.num_cells(); ++c) {
    const std::int64_t* cell = mesh.cells.data() + c * mesh.simplex_size;
    for (int i = 0; i < mesh.simplex_size; ++i)
      for (int j = i + 1; j < mesh.simplex_size; ++j) {
        recs.push_back({cell[i], cell[j], 0});
        recs.push_back({cell[j], cell[i], 0});
      }
  }
  return from_records(mesh.num_nodes(), std::move(recs), false);
}

ad::Tensor edge_features(const ad::Tensor& positions, const Graph& graph) {
  const int d = static_cast<int>(positions.cols());
  const std::int64_t e = graph.num_edges();
  ad::Tensor out(e, d + 1);
  auto pd = positions.data();
  auto od = out.data_mut();
  std::int64_t degenerate = 0;
  for (std::int64_t k = 0; k < e; ++k) {
    const double* us = pd.data() + graph.senders[k] * d;
    const double* ur = pd.data() + graph.receivers[k] * d;
    double norm2 = 0.0;
    for (int c = 0; c < d; ++c) {
      double diff = us[c] - ur[c];
      od[k * (d + 1) + c] = diff;
      norm2 += diff * diff;
    }
    double norm = std::sqrt(norm2);
    od[k * (d + 1) + d] = norm;
    if (norm == 0.0) ++degenerate;
  }
  if (degenerate > 0)
    log_warn("edge_features: " + std::to_string(degenerate) + " zero-length edge(s)");
  return out;
}

ad::Tensor edge_features_world(const ad::Tensor& mesh_positions,
                               const ad::Tensor& world_positions, const Graph& graph) {
  if (!graph.has_world_edges())
    throw StructuralError("edge_features_world: graph carries no world flags");
  const int d = static_cast<int>(mesh_positions.cols());
  const std::int64_t e = graph.num_edges();
  ad::Tensor out(e, d + 2);
  auto md = mesh_positions.data();
  auto wd = world_positions.data();
  auto od = out.data_mut();
  for (std::int64_t k = 0; k < e; ++k) {
    const bool world = graph.world_flag[k] != 0;
    const double* base = world ? wd.data() : md.data();
    const double* us = base + graph.senders[k] * d;
    const double* ur = base + graph.receivers[k] * d;
    double norm2 = 0.0;
    for (int c = 0; c < d; ++c) {
      double diff = us[c] - ur[c];
      od[k * (d + 2) + c] = diff;
      norm2 += diff * diff;
    }
    od[k * (d + 2) + d] = std::sqrt(norm2);
    od[k * (d + 2) + d + 1] = world ? 1.0 : 0.0;
  }
  return out;
}

Graph add_world_edges(const Graph& graph, const ad::Tensor& world_positions, double radius) {
  if (!(radius > 0.0)) throw ConfigError("add_world_edges: radius must be positive");
  const std::int64_t n = graph.num_nodes;
  if (world_positions.rows() != n)
    throw StructuralError("add_world_edges: position count mismatch");
  const int d = static_cast<int>(world_positions.cols());

  std::vector<EdgeRec> recs;
  recs.reserve(graph.senders.size() * 2);
  for (std::int64_t k = 0; k < graph.num_edges(); ++k)
    recs.push_back({graph.receivers[k], graph.senders[k],
                    graph.has_world_edges() ? graph.world_flag[k] : std::uint8_t{0}});

  SpatialIndex index(world_positions);
  auto pd = world_positions.data();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j : index.radius_query(pd.data() + i * d, radius)) {
      if (j <= i) continue;  // each unordered pair once
      recs.push_back({i, j, 1});
      recs.push_back({j, i, 1});
    }
  }

  // mesh edges win over a world pair covering the same adjacency: sorting puts
  // the mesh record first and unique keeps it
  std::sort(recs.begin(), recs.end(), [](const EdgeRec& a, const EdgeRec& b) {
    return std::tie(a.r, a.s, a.world) < std::tie(b.r, b.s, b.world);
  });
  recs.erase(std::unique(recs.begin(), recs.end()), recs.end());

  Graph g;
  g.num_nodes = n;
  for (const auto& e : recs) {
    g.receivers.push_back(e.r);
    g.senders.push_back(e.s);
    g.world_flag.push_back(e.world);
  }
  return g;
}

Subgraph induced_subgraph(const Graph& graph, const std::vector<std::int64_t>& keep) {
  if (keep.empty()) throw StructuralError("induced_subgraph: empty keep set");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= graph.num_nodes)
      throw StructuralError("induced_subgraph: keep index out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw StructuralError("induced_subgraph: keep set must be strictly increasing");
  }

  Subgraph out;
  out.old_to_new.assign(static_cast<std::size_t>(graph.num_nodes), -1);
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.old_to_new[static_cast<std::size_t>(keep[i])] = static_cast<std::int64_t>(i);

  out.graph.num_nodes = static_cast<std::int64_t>(keep.size());
  const bool flags = graph.has_world_edges();
  for (std::int64_t k = 0; k < graph.num_edges(); ++k) {
    std::int64_t nr = out.old_to_new[static_cast<std::size_t>(graph.receivers[k])];
    std::int64_t ns = out.old_to_new[static_cast<std::size_t>(graph.senders[k])];
    if (nr < 0 || ns < 0) continue;
    out.graph.receivers.push_back(nr);
    out.graph.senders.push_back(ns);
    if (flags) out.graph.world_flag.push_back(graph.world_flag[k]);
  }
  // the old order was canonical and the index map is monotone, so the
  // filtered edge list is already sorted by (receiver, sender)
  return out;
}

}  // namespace mc
