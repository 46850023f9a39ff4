#include "meshcycle/model.hpp"

#include <cstdio>

#include "meshcycle/common.hpp"

namespace mc {

void ModelConfig::validate() const {
  if (node_in_dim <= 0 || edge_in_dim <= 0 || out_dim <= 0)
    throw ConfigError("model: feature widths must be positive");
  if (latent <= 0 || mlp_hidden <= 0) throw ConfigError("model: latent widths must be positive");
  if (heads <= 0) throw ConfigError("model: head count must be positive");
  if (!(pool_ratio > 0.0) || pool_ratio > 1.0)
    throw ConfigError("model: pool ratio must lie in (0, 1]");
  if (knn_neighbors < 1) throw ConfigError("model: knn neighbor count must be at least 1");
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  spec_ = CycleSpec::parse(cfg_.cycle);
  node_enc_ = {cfg_.node_in_dim, cfg_.mlp_hidden, cfg_.latent, cfg_.mlp_layers, true};
  edge_enc_ = {cfg_.edge_in_dim, cfg_.mlp_hidden, cfg_.latent, cfg_.mlp_layers, true};
  dec_ = {cfg_.latent, cfg_.mlp_hidden, cfg_.out_dim, cfg_.mlp_layers, false};
  cycle_cfg_.block = {cfg_.latent,
                      cfg_.mlp_hidden,
                      cfg_.mlp_layers,
                      cfg_.processor,
                      cfg_.heads,
                      cfg_.residuals,
                      cfg_.gat_sigma_softmax,
                      cfg_.gat_deep_logits};
  cycle_cfg_.pool_ratio = cfg_.pool_ratio;
  cycle_cfg_.knn_neighbors = cfg_.knn_neighbors;
  cycle_cfg_.gate = cfg_.gate;
  cycle_cfg_.upscale_residual = cfg_.upscale_residual;
}

void Model::init_params(ParamStore& store, std::uint64_t seed) const {
  auto rng = make_rng(seed, "model_init");
  mlp_init(store, "enc/node", node_enc_, rng);
  mlp_init(store, "enc/edge", edge_enc_, rng);
  cycle_init(store, "proc", cycle_cfg_, spec_, rng);
  mlp_init(store, "dec", dec_, rng);
}

Tensor Model::forward(Tape& tape, TapeBinding& bind, const Graph& graph,
                      const Tensor& positions, const Tensor& node_input,
                      const Tensor& edge_input, const EdgeEncoder& raw_edges,
                      SelectionLog* selection_log, FrozenSelection* frozen_selection) const {
  if (node_input.cols() != cfg_.node_in_dim)
    throw ConfigError("model: node input width " + std::to_string(node_input.cols()) +
                      ", configured " + std::to_string(cfg_.node_in_dim));
  if (edge_input.cols() != cfg_.edge_in_dim)
    throw ConfigError("model: edge input width " + std::to_string(edge_input.cols()) +
                      ", configured " + std::to_string(cfg_.edge_in_dim));
  if (node_input.rows() != graph.num_nodes || edge_input.rows() != graph.num_edges())
    throw StructuralError("model: feature row counts disagree with graph");

  Tensor v = mlp_forward(tape, bind, "enc/node", node_enc_, node_input);
  Tensor e = mlp_forward(tape, bind, "enc/edge", edge_enc_, edge_input);

  EdgeEncoder encode = [this, &bind, &raw_edges](Tape& t, const Graph& g,
                                                 const Tensor& pos) -> Tensor {
    return mlp_forward(t, bind, "enc/edge", edge_enc_, raw_edges(t, g, pos));
  };

  v = run_cycle(tape, bind, "proc", cycle_cfg_, spec_, graph, positions, v, e, encode,
                selection_log, frozen_selection);
  return mlp_forward(tape, bind, "dec", dec_, v);
}

EdgeEncoder plain_edge_features() {
  return [](Tape&, const Graph& g, const Tensor& pos) { return edge_features(pos, g); };
}

std::string model_config_guard(const ModelConfig& cfg) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "node_in=%d;edge_in=%d;out=%d;latent=%d;hidden=%d;layers=%d;proc=%d;heads=%d;"
                "cycle=%s;ratio=%.6f;knn=%d;gate=%d;res=%d;ures=%d",
                cfg.node_in_dim, cfg.edge_in_dim, cfg.out_dim, cfg.latent, cfg.mlp_hidden,
                cfg.mlp_layers, static_cast<int>(cfg.processor), cfg.heads, cfg.cycle.c_str(),
                cfg.pool_ratio, cfg.knn_neighbors, static_cast<int>(cfg.gate),
                cfg.residuals ? 1 : 0, cfg.upscale_residual ? 1 : 0);
  return buf;
}

}  // namespace mc
