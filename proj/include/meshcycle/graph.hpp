#pragma once
// Directed-edge graph over mesh nodes plus the feature constructors and the
// subgraph machinery used by pruning and masking.

#include <cstdint>
#include <utility>
#include <vector>

#include "meshcycle/mesh.hpp"
#include "meshcycle/tensor.hpp"

namespace mc {

// Every undirected adjacency is stored as both directed edges, sorted by
// (receiver, sender) so segment aggregation is deterministic.
struct Graph {
  std::int64_t num_nodes = 0;
  std::vector<std::int64_t> senders;
  std::vector<std::int64_t> receivers;
  // Empty when the graph has no world edges, else one flag per edge.
  std::vector<std::uint8_t> world_flag;

  std::int64_t num_edges() const { return static_cast<std::int64_t>(senders.size()); }
  bool has_world_edges() const { return !world_flag.empty(); }

  // Checks bidirectionality, canonical order, and the no-self-loop /
  // no-duplicate invariants.
  void validate() const;
};

// Directed edge set {(i,j),(j,i)} for every pair sharing a cell, deduplicated.
Graph build_graph(const Mesh& mesh);

// Row k = [u_s - u_r, ||u_s - u_r||] in mesh space, width D+1. Zero-length
// edges are allowed and logged once per call.
ad::Tensor edge_features(const ad::Tensor& positions, const Graph& graph);

// Width D+2 variant for graphs with world edges: world rows use world-space
// displacement and the last column carries the mesh/world flag.
ad::Tensor edge_features_world(const ad::Tensor& mesh_positions,
                               const ad::Tensor& world_positions, const Graph& graph);

// Adds both directions for every non-adjacent pair closer than radius in
// world space; resulting edges are re-sorted canonically.
Graph add_world_edges(const Graph& graph, const ad::Tensor& world_positions, double radius);

struct Subgraph {
  Graph graph;
  std::vector<std::int64_t> old_to_new;  // -1 for dropped nodes
};

// Edges with both endpoints kept, reindexed; no replacement edges are added,
// so isolated nodes and severed components are permitted.
Subgraph induced_subgraph(const Graph& graph, const std::vector<std::int64_t>& keep);

}  // namespace mc
