#pragma once
// Synthetic trajectory generation: jittered structured triangulations with an
// explicit graph-Laplacian diffusion/advection integrator as the independent
// ground-truth solver.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "meshcycle/graph.hpp"
#include "meshcycle/mesh.hpp"

namespace mc {

struct SyntheticConfig {
  int nx = 36;
  int ny = 28;
  double width = 1.6;
  double height = 1.2;
  double jitter = 0.25;  // fraction of grid spacing, interior nodes only

  double obstacle_radius = 0.0;  // 0 disables the hole
  double obstacle_cx = 0.45;
  double obstacle_cy = 0.6;

  enum class Physics { kDiffusion, kAdvectionDiffusion };
  enum class Weighting { kUniform, kCotangent };
  Physics physics = Physics::kDiffusion;
  Weighting weighting = Weighting::kUniform;
  double kappa = 1.0;
  double adv_x = 0.0;
  double adv_y = 0.0;
  double dt = 2e-4;
  int frames = 100;

  int num_blobs = 3;
  double inflow_value = 1.0;
  bool closed_domain = false;  // all-fluid mesh, no pinned values

  std::uint64_t seed = 0;
};

struct Trajectory {
  Mesh mesh;
  std::vector<std::string> field_names;
  std::vector<std::pair<std::string, double>> globals;
  double dt = 0.0;
  std::vector<ad::Tensor> frames;  // T frames of N x F dynamic fields

  std::int64_t num_frames() const { return static_cast<std::int64_t>(frames.size()); }
  std::int64_t num_fields() const { return static_cast<std::int64_t>(field_names.size()); }
};

Mesh generate_mesh(const SyntheticConfig& cfg);

// Shortest edge length; the explicit-step coefficient kappa*dt/h_min^2 must
// stay at or below 0.2.
double min_edge_length(const Mesh& mesh, const Graph& graph);

// One explicit integrator step; boundary rows are returned unchanged.
ad::Tensor oracle_step(const Mesh& mesh, const Graph& graph, const SyntheticConfig& cfg,
                       const ad::Tensor& state);

Trajectory simulate_oracle(const Mesh& mesh, const SyntheticConfig& cfg);

// Consecutive-frame index pairs (t, t+stride), in order.
std::vector<std::pair<int, int>> sample_pairs(const Trajectory& traj, int stride = 1);

// frames[t+stride] - frames[t]
ad::Tensor delta_frame(const Trajectory& traj, int t, int stride = 1);

}  // namespace mc
