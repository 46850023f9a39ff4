#include "meshcycle/multigrid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "meshcycle/common.hpp"
#include "meshcycle/spatial.hpp"

namespace mc {

CycleSpec CycleSpec::parse(const std::string& text) {
  CycleSpec spec;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t len = 0;
      int count = std::stoi(text.substr(i), &len);
      for (int k = 0; k < count; ++k) spec.tokens.push_back(Token::kMessage);
      i += len;
    } else if (c == 'M' || c == 'm') {
      spec.tokens.push_back(Token::kMessage);
      ++i;
    } else if (c == 'D' || c == 'd') {
      spec.tokens.push_back(Token::kDown);
      ++i;
    } else if (c == 'U' || c == 'u') {
      spec.tokens.push_back(Token::kUp);
      ++i;
    } else {
      throw ConfigError(std::string("cycle spec: unexpected character '") + c + "' in \"" +
                        text + "\"");
    }
  }
  spec.validate();
  return spec;
}

void CycleSpec::validate() const {
  int depth = 0;
  for (auto t : tokens) {
    if (t == Token::kDown) ++depth;
    if (t == Token::kUp) --depth;
    if (depth < 0) throw ConfigError("cycle spec: a prefix has more U than D tokens");
  }
  if (depth != 0) throw ConfigError("cycle spec: D and U tokens are not balanced");
}

int CycleSpec::count(Token t) const {
  return static_cast<int>(std::count(tokens.begin(), tokens.end(), t));
}

int CycleSpec::depth() const {
  int d = 0, best = 0;
  for (auto t : tokens) {
    if (t == Token::kDown) best = std::max(best, ++d);
    if (t == Token::kUp) --d;
  }
  return best;
}

std::string CycleSpec::str() const {
  std::string s;
  for (auto t : tokens) s.push_back(static_cast<char>(t));
  return s;
}

InterpPlan knn_interp_plan(const Tensor& coarse_pos, const Tensor& fine_pos, int neighbors) {
  constexpr double kEps = 1e-9;       // added to squared distances
  constexpr double kExact2 = 1e-24;   // squared coincidence threshold (d < 1e-12)
  const std::int64_t k = coarse_pos.rows();
  const std::int64_t n = fine_pos.rows();
  const int dim = static_cast<int>(fine_pos.cols());
  if (k < 1) throw StructuralError("knn_interp_plan: no coarse points");
  if (coarse_pos.cols() != dim) throw StructuralError("knn_interp_plan: dimension mismatch");

  InterpPlan plan;
  plan.fan = std::min<std::int64_t>(neighbors, k);
  plan.fine_rows = n;
  plan.idx.resize(static_cast<std::size_t>(n * plan.fan));
  plan.weights.resize(static_cast<std::size_t>(n * plan.fan));

  SpatialIndex index(coarse_pos);
  std::vector<std::int64_t> nn;
  std::vector<double> d2;
  for (std::int64_t i = 0; i < n; ++i) {
    index.knn(fine_pos.data().data() + i * dim, static_cast<int>(plan.fan), nn, d2);
    auto* row_idx = plan.idx.data() + i * plan.fan;
    auto* row_w = plan.weights.data() + i * plan.fan;
    if (d2[0] < kExact2) {
      // coincident coarse node: copy exactly (nn[0] is the lowest-index tie)
      for (std::int64_t f = 0; f < plan.fan; ++f) {
        row_idx[f] = nn[0];
        row_w[f] = f == 0 ? 1.0 : 0.0;
      }
      continue;
    }
    double total = 0.0;
    for (std::int64_t f = 0; f < plan.fan; ++f) {
      row_idx[f] = nn[static_cast<std::size_t>(f)];
      row_w[f] = 1.0 / (d2[static_cast<std::size_t>(f)] + kEps);
      total += row_w[f];
    }
    for (std::int64_t f = 0; f < plan.fan; ++f) row_w[f] /= total;
  }
  return plan;
}

Tensor knn_interpolate(Tape& tape, const Tensor& coarse_latents, const Tensor& coarse_pos,
                       const Tensor& fine_pos, int neighbors) {
  InterpPlan plan = knn_interp_plan(coarse_pos, fine_pos, neighbors);
  return tape.weighted_gather_sum(coarse_latents, plan.idx, plan.weights, plan.fine_rows,
                                  plan.fan);
}

void pooling_init(ParamStore& store, const std::string& prefix, const BlockSpec& block,
                  std::mt19937_64& rng) {
  block_init(store, prefix + "/blk", block, rng);
  store.create(prefix + "/p_vec", attention_vec_init(block.latent, rng));
}

namespace {

// Block output plus the global-softmax score column.
struct PoolEval {
  Tensor latents;       // N x p, after the pre-pool block
  Tensor edge_latents;  // updated edges from the same block
  Tensor scores;        // N x 1, sums to one
};

PoolEval eval_pool(Tape& tape, TapeBinding& bind, const std::string& prefix,
                   const BlockSpec& block, const Graph& graph, const Tensor& v,
                   const Tensor& e) {
  auto [x, e_out] = block_forward(tape, bind, prefix + "/blk", block, graph, v, e);
  Tensor p_hat = tape.normalize_vec(bind(prefix + "/p_vec"));
  Tensor s = tape.matmul(x, p_hat);  // N x 1
  std::vector<std::int64_t> one_segment(static_cast<std::size_t>(graph.num_nodes), 0);
  Tensor y = tape.segment_softmax(s, one_segment, 1);
  return {x, e_out, y};
}

}  // namespace

Tensor attention_scores(Tape& tape, TapeBinding& bind, const std::string& prefix,
                        const BlockSpec& block, const Graph& graph, const Tensor& v,
                        const Tensor& e) {
  return eval_pool(tape, bind, prefix, block, graph, v, e).scores;
}

std::vector<std::int64_t> top_k_indices(const Tensor& scores, double ratio) {
  const std::int64_t n = scores.rows();
  if (!(ratio > 0.0) || ratio > 1.0) throw ConfigError("top_k: ratio must lie in (0, 1]");
  const auto k = static_cast<std::int64_t>(std::ceil(ratio * static_cast<double>(n)));
  if (k <= 0) throw StructuralError("top_k: empty selection");
  auto sd = scores.data();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::int64_t a, std::int64_t b) {
                      if (sd[a] != sd[b]) return sd[a] > sd[b];
                      return a < b;  // ties favor the lower index
                    });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

void cycle_init(ParamStore& store, const std::string& prefix, const CycleConfig& cfg,
                const CycleSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  int m = 0, d = 0;
  for (auto t : spec.tokens) {
    if (t == CycleSpec::Token::kMessage) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "m%02d", m++);
      block_init(store, prefix + "/" + buf, cfg.block, rng);
    } else if (t == CycleSpec::Token::kDown) {
      pooling_init(store, prefix + "/d" + std::to_string(d++) + "/pool", cfg.block, rng);
    }
  }
}

namespace {

Tensor take_rows(const Tensor& m, const std::vector<std::int64_t>& rows) {
  Tensor out(static_cast<std::int64_t>(rows.size()), m.cols());
  const auto c = m.cols();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(m.data().data() + rows[i] * c, c, out.data_mut().data() + i * c);
  return out;
}

struct Level {
  Graph graph;
  Tensor positions;
  Tensor latents;  // fine latents at push time (after the pre-pool block)
  bool identity = false;
};

}  // namespace

Tensor run_cycle(Tape& tape, TapeBinding& bind, const std::string& prefix,
                 const CycleConfig& cfg, const CycleSpec& spec, const Graph& graph,
                 const Tensor& positions, Tensor v, Tensor e, const EdgeEncoder& encode_edges,
                 SelectionLog* selection_log, FrozenSelection* frozen) {
  spec.validate();

  Graph cur_graph = graph;
  Tensor cur_pos = positions;
  std::vector<std::int64_t> cur_ids(static_cast<std::size_t>(graph.num_nodes));
  std::iota(cur_ids.begin(), cur_ids.end(), 0);

  std::vector<Level> stack;
  std::vector<std::vector<std::int64_t>> id_stack;
  int m = 0, d = 0;

  for (auto tok : spec.tokens) {
    if (tok == CycleSpec::Token::kMessage) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "m%02d", m++);
      std::tie(v, e) = block_forward(tape, bind, prefix + "/" + buf, cfg.block, cur_graph, v, e);
    } else if (tok == CycleSpec::Token::kDown) {
      if (cur_graph.num_nodes < 2)
        throw StructuralError("downscale: need at least two nodes");
      const int d_index = d;
      const std::string pool = prefix + "/d" + std::to_string(d++) + "/pool";
      PoolEval pe = eval_pool(tape, bind, pool, cfg.block, cur_graph, v, e);
      std::vector<std::int64_t> kept;
      if (frozen && frozen->recorded) {
        if (d_index >= static_cast<int>(frozen->kept.size()))
          throw StructuralError("frozen selection has too few entries for this schedule");
        kept = frozen->kept[static_cast<std::size_t>(d_index)];
      } else {
        kept = top_k_indices(pe.scores, cfg.pool_ratio);
        if (frozen) frozen->kept.push_back(kept);
      }
      const bool identity = static_cast<std::int64_t>(kept.size()) == cur_graph.num_nodes;

      if (selection_log) {
        std::vector<std::uint8_t> is_kept(static_cast<std::size_t>(cur_graph.num_nodes), 0);
        for (auto i : kept) is_kept[static_cast<std::size_t>(i)] = 1;
        for (std::int64_t i = 0; i < cur_graph.num_nodes; ++i)
          selection_log->rows.push_back({cur_ids[static_cast<std::size_t>(i)],
                                         static_cast<int>(stack.size()), is_kept[i] != 0,
                                         pe.scores.data()[i]});
      }

      stack.push_back(Level{cur_graph, cur_pos, pe.latents, identity});
      id_stack.push_back(cur_ids);

      Tensor gathered = identity ? pe.latents : tape.gather_rows(pe.latents, kept);
      if (cfg.gate != GateMode::kOff) {
        Tensor gate = tape.gather_rows(pe.scores, kept);
        if (cfg.gate == GateMode::kScaled)
          gate = tape.scale(gate, static_cast<double>(cur_graph.num_nodes));
        gathered = tape.rowwise_mul(gathered, gate);
      }
      v = gathered;

      if (identity) {
        e = pe.edge_latents;  // graph unchanged; keep the block's edge update
      } else {
        auto sub = induced_subgraph(cur_graph, kept);
        cur_graph = std::move(sub.graph);
        cur_pos = take_rows(cur_pos, kept);
        std::vector<std::int64_t> new_ids(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i)
          new_ids[i] = cur_ids[static_cast<std::size_t>(kept[i])];
        cur_ids = std::move(new_ids);
        e = encode_edges(tape, cur_graph, cur_pos);
      }
    } else {  // kUp
      if (stack.empty()) throw StructuralError("upscale: level stack is empty");
      Level level = std::move(stack.back());
      stack.pop_back();
      cur_ids = std::move(id_stack.back());
      id_stack.pop_back();

      if (level.identity) {
        if (cfg.upscale_residual) v = tape.add(v, level.latents);
        // graph, positions, and edge latents are unchanged
      } else {
        Tensor up = knn_interpolate(tape, v, cur_pos, level.positions, cfg.knn_neighbors);
        v = cfg.upscale_residual ? tape.add(up, level.latents) : up;
        cur_graph = std::move(level.graph);
        cur_pos = level.positions;
        e = encode_edges(tape, cur_graph, cur_pos);
      }
    }
  }
  if (frozen) frozen->recorded = true;
  return v;
}

}  // namespace mc
