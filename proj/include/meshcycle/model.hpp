#pragma once
// Full encode -> processor-cycle -> decode assembly.

#include <cstdint>
#include <string>

#include "meshcycle/multigrid.hpp"

namespace mc {

struct ModelConfig {
  int node_in_dim = 0;
  int edge_in_dim = 0;
  int out_dim = 0;

  int latent = 128;
  int mlp_hidden = 128;
  int mlp_layers = 2;
  NodeProcessor processor = NodeProcessor::kGat;
  int heads = 4;

  std::string cycle = "15";  // plain encode-process-decode by default
  double pool_ratio = 0.5;
  int knn_neighbors = 3;
  GateMode gate = GateMode::kScaled;
  bool residuals = true;
  bool upscale_residual = true;
  bool gat_sigma_softmax = false;
  bool gat_deep_logits = false;

  void validate() const;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const CycleSpec& cycle() const { return spec_; }

  void init_params(ParamStore& store, std::uint64_t seed) const;

  // node_input/edge_input are the (already normalized) fine-graph features;
  // raw_edges recomputes normalized edge features whenever the cycle changes
  // graphs. Output is per-node deltas in normalized target space.
  Tensor forward(Tape& tape, TapeBinding& bind, const Graph& graph, const Tensor& positions,
                 const Tensor& node_input, const Tensor& edge_input,
                 const EdgeEncoder& raw_edges, SelectionLog* selection_log = nullptr,
                 FrozenSelection* frozen_selection = nullptr) const;

 private:
  ModelConfig cfg_;
  CycleSpec spec_;
  MlpSpec node_enc_, edge_enc_, dec_;
  CycleConfig cycle_cfg_;
};

// Featurizer for unnormalized pipelines (tests, probes): plain geometric edge
// features of width D+1.
EdgeEncoder plain_edge_features();

// Canonical one-line description of a model configuration; stored in
// checkpoints and compared on resume.
std::string model_config_guard(const ModelConfig& cfg);

}  // namespace mc
