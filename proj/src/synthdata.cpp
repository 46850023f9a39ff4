#include "meshcycle/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "meshcycle/common.hpp"

namespace mc {

Mesh generate_mesh(const SyntheticConfig& cfg) {
  if (cfg.nx < 2 || cfg.ny < 2 || cfg.nx * cfg.ny < 10)
    throw ConfigError("generate_mesh: need at least 10 grid nodes");
  if (!(cfg.width > 0.0) || !(cfg.height > 0.0))
    throw ConfigError("generate_mesh: domain extent must be positive");

  const double hx = cfg.width / (cfg.nx - 1);
  const double hy = cfg.height / (cfg.ny - 1);
  const double h = std::min(hx, hy);

  const bool hole = cfg.obstacle_radius > 0.0;
  if (hole) {
    const double r = cfg.obstacle_radius;
    if (cfg.obstacle_cx - r <= hx || cfg.obstacle_cx + r >= cfg.width - hx ||
        cfg.obstacle_cy - r <= hy || cfg.obstacle_cy + r >= cfg.height - hy)
      throw ConfigError("generate_mesh: obstacle does not fit inside the domain");
  }

  auto rng = make_rng(cfg.seed, "mesh_jitter");
  std::uniform_real_distribution<double> jit(-cfg.jitter * 0.5 * h, cfg.jitter * 0.5 * h);

  const std::int64_t grid_n = static_cast<std::int64_t>(cfg.nx) * cfg.ny;
  std::vector<double> pos(static_cast<std::size_t>(grid_n) * 2);
  std::vector<std::int8_t> removed(static_cast<std::size_t>(grid_n), 0);

  for (int row = 0; row < cfg.ny; ++row)
    for (int col = 0; col < cfg.nx; ++col) {
      const std::int64_t i = static_cast<std::int64_t>(row) * cfg.nx + col;
      double x = col * hx;
      double y = row * hy;
      const bool interior = col > 0 && col < cfg.nx - 1 && row > 0 && row < cfg.ny - 1;
      if (interior && cfg.jitter > 0.0) {
        x += jit(rng);
        y += jit(rng);
      } else if (cfg.jitter > 0.0) {
        // keep the RNG stream independent of which nodes are interior
        jit(rng);
        jit(rng);
      }
      pos[i * 2] = x;
      pos[i * 2 + 1] = y;
      if (hole) {
        const double dx = x - cfg.obstacle_cx, dy = y - cfg.obstacle_cy;
        if (std::sqrt(dx * dx + dy * dy) < cfg.obstacle_radius) removed[i] = 1;
      }
    }

  // nodes adjacent to a removed grid neighbor form the obstacle ring
  std::vector<std::int8_t> ring(static_cast<std::size_t>(grid_n), 0);
  if (hole) {
    auto idx = [&](int row, int col) { return static_cast<std::int64_t>(row) * cfg.nx + col; };
    for (int row = 0; row < cfg.ny; ++row)
      for (int col = 0; col < cfg.nx; ++col) {
        if (removed[idx(row, col)]) continue;
        for (auto [dr, dc] : {std::pair{0, 1}, {0, -1}, {1, 0}, {-1, 0}, {1, 1}, {-1, -1}}) {
          int r2 = row + dr, c2 = col + dc;
          if (r2 < 0 || r2 >= cfg.ny || c2 < 0 || c2 >= cfg.nx) continue;
          if (removed[idx(r2, c2)]) ring[idx(row, col)] = 1;
        }
      }
  }

  std::vector<std::int64_t> compact(static_cast<std::size_t>(grid_n), -1);
  Mesh mesh;
  std::vector<double> mpos;
  for (int row = 0; row < cfg.ny; ++row)
    for (int col = 0; col < cfg.nx; ++col) {
      const std::int64_t i = static_cast<std::int64_t>(row) * cfg.nx + col;
      if (removed[i]) continue;
      compact[i] = static_cast<std::int64_t>(mpos.size() / 2);
      mpos.push_back(pos[i * 2]);
      mpos.push_back(pos[i * 2 + 1]);

      std::int32_t type;
      if (cfg.closed_domain) {
        type = static_cast<std::int32_t>(NodeType::kFluid);
      } else if (col == 0) {
        type = static_cast<std::int32_t>(NodeType::kInflow);
      } else if (col == cfg.nx - 1) {
        type = static_cast<std::int32_t>(NodeType::kOutflow);
      } else if (row == 0 || row == cfg.ny - 1) {
        type = static_cast<std::int32_t>(NodeType::kWall);
      } else if (ring[i]) {
        type = static_cast<std::int32_t>(NodeType::kObstacle);
      } else {
        type = static_cast<std::int32_t>(NodeType::kFluid);
      }
      mesh.node_type.push_back(type);
    }

  auto keep_tri = [&](std::int64_t a, std::int64_t b, std::int64_t c) {
    if (compact[a] < 0 || compact[b] < 0 || compact[c] < 0) return;
    mesh.cells.insert(mesh.cells.end(), {compact[a], compact[b], compact[c]});
  };
  for (int row = 0; row + 1 < cfg.ny; ++row)
    for (int col = 0; col + 1 < cfg.nx; ++col) {
      const std::int64_t a = static_cast<std::int64_t>(row) * cfg.nx + col;
      const std::int64_t b = a + 1;
      const std::int64_t c = a + cfg.nx;
      const std::int64_t d = c + 1;
      keep_tri(a, b, c);
      keep_tri(b, d, c);
    }

  const auto n = static_cast<std::int64_t>(mpos.size() / 2);
  if (n < 10) throw ConfigError("generate_mesh: obstacle removed too many nodes");
  mesh.positions = ad::Tensor::from({n, 2}, std::move(mpos));
  mesh.simplex_size = 3;
  mesh.validate();
  return mesh;
}

double min_edge_length(const Mesh& mesh, const Graph& graph) {
  double h = std::numeric_limits<double>::max();
  auto p = mesh.positions.data();
  for (std::int64_t k = 0; k < graph.num_edges(); ++k) {
    const double dx = p[graph.senders[k] * 2] - p[graph.receivers[k] * 2];
    const double dy = p[graph.senders[k] * 2 + 1] - p[graph.receivers[k] * 2 + 1];
    h = std::min(h, std::sqrt(dx * dx + dy * dy));
  }
  return h;
}

namespace {

// Symmetric diffusion weights per directed edge. Uniform weighting scales a
// unit weight by kappa*dt/h_mean^2; cotangent uses the classic half-sum of
// opposite angles times kappa*dt.
std::vector<double> diffusion_weights(const Mesh& mesh, const Graph& graph,
                                      const SyntheticConfig& cfg) {
  const std::int64_t e = graph.num_edges();
  std::vector<double> w(static_cast<std::size_t>(e), 0.0);
  auto p = mesh.positions.data();

  if (cfg.weighting == SyntheticConfig::Weighting::kUniform) {
    double h_sum = 0.0;
    for (std::int64_t k = 0; k < e; ++k) {
      const double dx = p[graph.senders[k] * 2] - p[graph.receivers[k] * 2];
      const double dy = p[graph.senders[k] * 2 + 1] - p[graph.receivers[k] * 2 + 1];
      h_sum += std::sqrt(dx * dx + dy * dy);
    }
    const double h_mean = h_sum / static_cast<double>(std::max<std::int64_t>(e, 1));
    const double coef = cfg.kappa * cfg.dt / (h_mean * h_mean);
    std::fill(w.begin(), w.end(), coef);
    return w;
  }

  // cotangent: accumulate cot(angle opposite to each edge) over both incident
  // triangles, normalized by the receiver's barycentric vertex area; negative
  // weights from obtuse triangles are clamped away
  auto edge_pos = [&](std::int64_t a, std::int64_t b, double& dx, double& dy) {
    dx = p[b * 2] - p[a * 2];
    dy = p[b * 2 + 1] - p[a * 2 + 1];
  };
  std::vector<double> cot_sum(static_cast<std::size_t>(e), 0.0);
  std::vector<double> vertex_area(static_cast<std::size_t>(mesh.num_nodes()), 0.0);
  auto find_edge = [&](std::int64_t r, std::int64_t s) {
    auto lo = std::lower_bound(graph.receivers.begin(), graph.receivers.end(), r);
    for (auto it = lo; it != graph.receivers.end() && *it == r; ++it) {
      const std::int64_t k = it - graph.receivers.begin();
      if (graph.senders[k] == s) return k;
    }
    return static_cast<std::int64_t>(-1);
  };
  for (std::int64_t c = 0; c < mesh.num_cells(); ++c) {
    const std::int64_t* cell = mesh.cells.data() + c * 3;
    for (int i = 0; i < 3; ++i) {
      const std::int64_t apex = cell[i], u = cell[(i + 1) % 3], v = cell[(i + 2) % 3];
      double ax, ay, bx, by;
      edge_pos(apex, u, ax, ay);
      edge_pos(apex, v, bx, by);
      const double cross = std::abs(ax * by - ay * bx);
      vertex_area[static_cast<std::size_t>(apex)] += cross / 6.0;  // area/3 per vertex
      if (cross < 1e-14) continue;
      const double cot = (ax * bx + ay * by) / cross;
      for (auto [r, s] : {std::pair{u, v}, {v, u}}) {
        const std::int64_t k = find_edge(r, s);
        if (k >= 0) cot_sum[static_cast<std::size_t>(k)] += 0.5 * cot;
      }
    }
  }
  for (std::int64_t k = 0; k < e; ++k) {
    const double area = std::max(vertex_area[static_cast<std::size_t>(graph.receivers[k])],
                                 1e-14);
    w[static_cast<std::size_t>(k)] = cfg.kappa * cfg.dt * std::max(cot_sum[k], 0.0) / area;
  }
  return w;
}

std::vector<double> advection_weights(const Mesh& mesh, const Graph& graph,
                                      const SyntheticConfig& cfg) {
  const std::int64_t e = graph.num_edges();
  std::vector<double> w(static_cast<std::size_t>(e), 0.0);
  if (cfg.physics != SyntheticConfig::Physics::kAdvectionDiffusion) return w;
  auto p = mesh.positions.data();
  for (std::int64_t k = 0; k < e; ++k) {
    const std::int64_t r = graph.receivers[k], s = graph.senders[k];
    const double dx = p[r * 2] - p[s * 2];
    const double dy = p[r * 2 + 1] - p[s * 2 + 1];
    const double len2 = dx * dx + dy * dy;
    if (len2 <= 0.0) continue;
    // upwind: sender contributes only when the velocity blows from s to r
    const double flux = cfg.adv_x * dx + cfg.adv_y * dy;
    w[static_cast<std::size_t>(k)] = cfg.dt * std::max(flux, 0.0) / len2;
  }
  return w;
}

}  // namespace

ad::Tensor oracle_step(const Mesh& mesh, const Graph& graph, const SyntheticConfig& cfg,
                       const ad::Tensor& state) {
  const auto wd = diffusion_weights(mesh, graph, cfg);
  const auto wa = advection_weights(mesh, graph, cfg);

  const std::int64_t f = state.cols();
  ad::Tensor next = state.clone();
  auto sd = state.data();
  auto nd = next.data_mut();
  for (std::int64_t k = 0; k < graph.num_edges(); ++k) {
    const std::int64_t r = graph.receivers[k], s = graph.senders[k];
    if (!cfg.closed_domain && is_boundary(mesh.node_type[static_cast<std::size_t>(r)]))
      continue;
    const double w = wd[static_cast<std::size_t>(k)] + wa[static_cast<std::size_t>(k)];
    for (std::int64_t c = 0; c < f; ++c)
      nd[r * f + c] += w * (sd[s * f + c] - sd[r * f + c]);
  }
  return next;
}

Trajectory simulate_oracle(const Mesh& mesh, const SyntheticConfig& cfg) {
  Graph graph = build_graph(mesh);
  const double h_min = min_edge_length(mesh, graph);
  if (cfg.kappa * cfg.dt / (h_min * h_min) > 0.2)
    throw ConfigError("simulate_oracle: explicit-step coefficient exceeds 0.2 (kappa*dt/h_min^2 = " +
                      std::to_string(cfg.kappa * cfg.dt / (h_min * h_min)) + ")");
  if (cfg.frames < 1) throw ConfigError("simulate_oracle: need at least one frame");

  const std::int64_t n = mesh.num_nodes();
  Trajectory traj;
  traj.mesh = mesh;
  traj.field_names = {"theta"};
  traj.globals = {{"kappa", cfg.kappa}, {"adv_x", cfg.adv_x}, {"adv_y", cfg.adv_y}};
  traj.dt = cfg.dt;

  // initial condition: smooth random blobs plus pinned boundary values
  auto rng = make_rng(cfg.seed, "init_field");
  std::uniform_real_distribution<double> ux(0.15 * cfg.width, 0.85 * cfg.width);
  std::uniform_real_distribution<double> uy(0.15 * cfg.height, 0.85 * cfg.height);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::uniform_real_distribution<double> sig(0.08, 0.2);

  ad::Tensor field(n, 1);
  auto fd = field.data_mut();
  auto p = mesh.positions.data();
  for (int b = 0; b < cfg.num_blobs; ++b) {
    const double cx = ux(rng), cy = uy(rng);
    const double a = amp(rng), s = sig(rng) * std::min(cfg.width, cfg.height);
    for (std::int64_t i = 0; i < n; ++i) {
      const double dx = p[i * 2] - cx, dy = p[i * 2 + 1] - cy;
      fd[i] += a * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
    }
  }
  if (!cfg.closed_domain) {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto t = mesh.node_type[static_cast<std::size_t>(i)];
      if (t == static_cast<std::int32_t>(NodeType::kInflow)) fd[i] = cfg.inflow_value;
      else if (t == static_cast<std::int32_t>(NodeType::kWall) ||
               t == static_cast<std::int32_t>(NodeType::kObstacle))
        fd[i] = 0.0;
    }
  }

  const auto wd = diffusion_weights(mesh, graph, cfg);
  const auto wa = advection_weights(mesh, graph, cfg);

  double norm0 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) norm0 += fd[i] * fd[i];
  norm0 = std::sqrt(norm0);

  traj.frames.push_back(field.clone());
  ad::Tensor cur = field;
  for (int t = 1; t < cfg.frames; ++t) {
    ad::Tensor next = cur.clone();
    auto cd = cur.data();
    auto ndd = next.data_mut();
    for (std::int64_t k = 0; k < graph.num_edges(); ++k) {
      const std::int64_t r = graph.receivers[k], s = graph.senders[k];
      if (!cfg.closed_domain && is_boundary(mesh.node_type[static_cast<std::size_t>(r)]))
        continue;
      const double w = wd[static_cast<std::size_t>(k)] + wa[static_cast<std::size_t>(k)];
      ndd[r] += w * (cd[s] - cd[r]);
    }
    double norm = 0.0;
    for (std::int64_t i = 0; i < n; ++i) norm += ndd[i] * ndd[i];
    norm = std::sqrt(norm);
    if (norm > 10.0 * std::max(norm0, 1e-12))
      throw NumericalError("simulate_oracle: field norm grew more than 10x, unstable step");
    traj.frames.push_back(next.clone());
    cur = next;
  }
  return traj;
}

std::vector<std::pair<int, int>> sample_pairs(const Trajectory& traj, int stride) {
  if (stride < 1) throw ConfigError("sample_pairs: stride must be at least 1");
  if (traj.num_frames() < 2) throw ConfigError("sample_pairs: need at least two frames");
  std::vector<std::pair<int, int>> pairs;
  for (int t = 0; t + stride < traj.num_frames(); ++t) pairs.push_back({t, t + stride});
  return pairs;
}

ad::Tensor delta_frame(const Trajectory& traj, int t, int stride) {
  const auto& a = traj.frames[static_cast<std::size_t>(t)];
  const auto& b = traj.frames[static_cast<std::size_t>(t + stride)];
  ad::Tensor out(a.rows(), a.cols());
  auto od = out.data_mut();
  auto ad_ = a.data();
  auto bd = b.data();
  for (std::int64_t i = 0; i < a.size(); ++i) od[i] = bd[i] - ad_[i];
  return out;
}

}  // namespace mc
