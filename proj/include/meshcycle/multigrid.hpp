#pragma once
// DownScale / UpScale machinery: score-based top-k pruning, inverse-distance
// KNN interpolation back onto the fine graph, and the token-driven cycle
// runner that threads message passing through the levels.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "meshcycle/graph.hpp"
#include "meshcycle/layers.hpp"

namespace mc {

// Schedule over tokens M (message passing), D (prune), U (refine). Parsed
// from strings like "15", "4D10U1" (digits are runs of M), or raw "MMDMU..".
struct CycleSpec {
  enum class Token : char { kMessage = 'M', kDown = 'D', kUp = 'U' };
  std::vector<Token> tokens;

  static CycleSpec parse(const std::string& text);
  void validate() const;  // balanced D/U, every prefix has #U <= #D
  int count(Token t) const;
  int depth() const;  // maximum concurrent D nesting
  std::string str() const;
};

enum class GateMode { kOff, kRaw, kScaled };  // kScaled multiplies scores by N

struct CycleConfig {
  BlockSpec block;
  double pool_ratio = 0.5;
  int knn_neighbors = 3;
  GateMode gate = GateMode::kScaled;
  bool upscale_residual = true;
};

// Inverse-square-distance interpolation plan from coarse points onto fine
// points: per fine row, `fan` coarse indices with normalized weights. A
// coarse point closer than 1e-12 captures the row exactly.
struct InterpPlan {
  std::vector<std::int64_t> idx;
  std::vector<double> weights;
  std::int64_t fan = 0;
  std::int64_t fine_rows = 0;
};

InterpPlan knn_interp_plan(const Tensor& coarse_pos, const Tensor& fine_pos, int neighbors);

Tensor knn_interpolate(Tape& tape, const Tensor& coarse_latents, const Tensor& coarse_pos,
                       const Tensor& fine_pos, int neighbors);

// Softmax-over-nodes attention score of Eq. 5 style pooling: one message
// passing block, projection on the normalized score vector, global softmax.
// `prefix` owns the block ("<prefix>/blk") and the vector ("<prefix>/p_vec").
void pooling_init(ParamStore& store, const std::string& prefix, const BlockSpec& block,
                  std::mt19937_64& rng);
Tensor attention_scores(Tape& tape, TapeBinding& bind, const std::string& prefix,
                        const BlockSpec& block, const Graph& graph, const Tensor& v,
                        const Tensor& e);

// Indices of the k = ceil(ratio*N) highest scores; ties break toward the
// lower node index; result sorted ascending.
std::vector<std::int64_t> top_k_indices(const Tensor& scores, double ratio);

struct SelectionLog {
  struct Row {
    std::int64_t node = 0;  // index in the original fine graph
    int level = 0;
    bool kept = false;
    double score = 0.0;
  };
  std::vector<Row> rows;
};

// Pins the kept-index sets across repeated forward passes. Top-k selection is
// a non-differentiable index operation, so finite-difference checks must stay
// on the smooth piece the reverse pass differentiates: the first pass records
// each D token's selection, later passes replay it.
struct FrozenSelection {
  std::vector<std::vector<std::int64_t>> kept;
  bool recorded = false;
};

using EdgeEncoder = std::function<Tensor(Tape&, const Graph&, const Tensor& positions)>;

void cycle_init(ParamStore& store, const std::string& prefix, const CycleConfig& cfg,
                const CycleSpec& spec, std::mt19937_64& rng);

// Executes the schedule left to right and returns node latents on the
// original fine graph. `encode_edges` supplies edge latents whenever the
// active graph changes (pruning or refinement onto a different node set).
Tensor run_cycle(Tape& tape, TapeBinding& bind, const std::string& prefix,
                 const CycleConfig& cfg, const CycleSpec& spec, const Graph& graph,
                 const Tensor& positions, Tensor v, Tensor e, const EdgeEncoder& encode_edges,
                 SelectionLog* selection_log = nullptr, FrozenSelection* frozen = nullptr);

}  // namespace mc
