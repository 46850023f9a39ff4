#pragma once
// Building blocks of the processor: MLPs, the multi-head graph-attention node
// function, and the message-passing block that combines them.

#include <random>
#include <string>
#include <utility>

#include "meshcycle/graph.hpp"
#include "meshcycle/params.hpp"
#include "meshcycle/tape.hpp"

namespace mc {

using ad::ParamStore;
using ad::Tape;
using ad::TapeBinding;
using ad::Tensor;

// Affine chain in -> hidden -> [hidden]*num_hidden_layers -> out with ReLU
// between affines and an optional LayerNorm on the output. The default spec
// is four affine layers of width 128.
struct MlpSpec {
  int in_dim = 0;
  int hidden_dim = 128;
  int out_dim = 0;
  int num_hidden_layers = 2;
  bool final_layer_norm = false;
};

void mlp_init(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
              std::mt19937_64& rng);
Tensor mlp_forward(Tape& tape, TapeBinding& bind, const std::string& prefix,
                   const MlpSpec& spec, const Tensor& x);

// Multi-head attention over graph neighborhoods. Heads project to the full
// output width and are averaged. Self-loops are added to every neighborhood
// here only, so isolated nodes keep a well-defined softmax.
struct GatSpec {
  int in_dim = 0;
  int out_dim = 0;
  int heads = 4;
  bool sigma_softmax = false;  // feature-wise softmax instead of ELU on the output
  bool deep_logits = false;    // one-hidden-layer logit map instead of a single affine
};

void gat_init(ParamStore& store, const std::string& prefix, const GatSpec& spec,
              std::mt19937_64& rng);
Tensor gat_forward(Tape& tape, TapeBinding& bind, const std::string& prefix,
                   const GatSpec& spec, const Graph& graph, const Tensor& x);

enum class NodeProcessor { kMlp, kGat };

struct BlockSpec {
  int latent = 128;
  int mlp_hidden = 128;
  int mlp_layers = 2;
  NodeProcessor processor = NodeProcessor::kGat;
  int heads = 4;
  bool residual = true;
  bool gat_sigma_softmax = false;
  bool gat_deep_logits = false;
};

void block_init(ParamStore& store, const std::string& prefix, const BlockSpec& spec,
                std::mt19937_64& rng);
// Returns updated (node latents, edge latents).
std::pair<Tensor, Tensor> block_forward(Tape& tape, TapeBinding& bind,
                                        const std::string& prefix, const BlockSpec& spec,
                                        const Graph& graph, const Tensor& v, const Tensor& e);

// Uniform fan-in initialization for one affine layer, shared by every module.
Tensor affine_weight_init(std::int64_t in_dim, std::int64_t out_dim, std::mt19937_64& rng);
Tensor affine_bias_init(std::int64_t in_dim, std::int64_t out_dim, std::mt19937_64& rng);
// Small-uniform init (+-0.05) for attention/score vectors.
Tensor attention_vec_init(std::int64_t dim, std::mt19937_64& rng);

}  // namespace mc
