#include "meshcycle/layers.hpp"

#include <cmath>
#include <vector>

#include "meshcycle/common.hpp"

namespace mc {

Tensor affine_weight_init(std::int64_t in_dim, std::int64_t out_dim, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w(in_dim, out_dim);
  for (auto& v : w.data_mut()) v = dist(rng);
  return w;
}

Tensor affine_bias_init(std::int64_t in_dim, std::int64_t out_dim, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor b(1, out_dim);
  for (auto& v : b.data_mut()) v = dist(rng);
  return b;
}

Tensor attention_vec_init(std::int64_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  Tensor a(dim, 1);
  for (auto& v : a.data_mut()) v = dist(rng);
  return a;
}

namespace {

std::vector<std::pair<std::int64_t, std::int64_t>> mlp_dims(const MlpSpec& spec) {
  if (spec.in_dim <= 0 || spec.out_dim <= 0 || spec.hidden_dim <= 0 ||
      spec.num_hidden_layers < 0)
    throw ConfigError("mlp: dimensions must be positive");
  std::vector<std::pair<std::int64_t, std::int64_t>> dims;
  std::int64_t cur = spec.in_dim;
  for (int l = 0; l < spec.num_hidden_layers + 1; ++l) {
    dims.push_back({cur, spec.hidden_dim});
    cur = spec.hidden_dim;
  }
  dims.push_back({cur, spec.out_dim});
  return dims;
}

}  // namespace

void mlp_init(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
              std::mt19937_64& rng) {
  auto dims = mlp_dims(spec);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const std::string base = prefix + "/aff" + std::to_string(l);
    store.create(base + "/W", affine_weight_init(dims[l].first, dims[l].second, rng));
    store.create(base + "/b", affine_bias_init(dims[l].first, dims[l].second, rng));
  }
  if (spec.final_layer_norm) {
    Tensor gain(1, spec.out_dim);
    for (auto& v : gain.data_mut()) v = 1.0;
    store.create(prefix + "/ln/g", gain);
    store.create(prefix + "/ln/b", Tensor(1, spec.out_dim));
  }
}

Tensor mlp_forward(Tape& tape, TapeBinding& bind, const std::string& prefix,
                   const MlpSpec& spec, const Tensor& x) {
  if (x.cols() != spec.in_dim)
    throw ConfigError("mlp '" + prefix + "': input width " + std::to_string(x.cols()) +
                      " does not match configured " + std::to_string(spec.in_dim));
  auto dims = mlp_dims(spec);
  Tensor h = x;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const std::string base = prefix + "/aff" + std::to_string(l);
    h = tape.add(tape.matmul(h, bind(base + "/W")), bind(base + "/b"));
    if (l + 1 < dims.size()) h = tape.relu(h);
  }
  if (spec.final_layer_norm)
    h = tape.layer_norm(h, bind(prefix + "/ln/g"), bind(prefix + "/ln/b"));
  return h;
}

namespace {

// Graph edges plus one self-loop per node, kept sorted by (receiver, sender).
void attention_edges(const Graph& g, std::vector<std::int64_t>& recv,
                     std::vector<std::int64_t>& send) {
  const std::int64_t n = g.num_nodes, e = g.num_edges();
  recv.clear();
  send.clear();
  recv.reserve(e + n);
  send.reserve(e + n);
  std::int64_t k = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    bool self_added = false;
    while (k < e && g.receivers[k] == r) {
      if (!self_added && g.senders[k] > r) {
        recv.push_back(r);
        send.push_back(r);
        self_added = true;
      }
      recv.push_back(r);
      send.push_back(g.senders[k]);
      ++k;
    }
    if (!self_added) {
      recv.push_back(r);
      send.push_back(r);
    }
  }
}

}  // namespace

void gat_init(ParamStore& store, const std::string& prefix, const GatSpec& spec,
              std::mt19937_64& rng) {
  if (spec.heads <= 0) throw ConfigError("gat: head count must be positive");
  for (int h = 0; h < spec.heads; ++h) {
    const std::string base = prefix + "/head" + std::to_string(h);
    store.create(base + "/W", affine_weight_init(spec.in_dim, spec.out_dim, rng));
    store.create(base + "/a_recv", attention_vec_init(spec.out_dim, rng));
    store.create(base + "/a_send", attention_vec_init(spec.out_dim, rng));
    if (spec.deep_logits) {
      store.create(base + "/logit/W", affine_weight_init(2 * spec.out_dim, spec.out_dim, rng));
      store.create(base + "/logit/b", affine_bias_init(2 * spec.out_dim, spec.out_dim, rng));
      store.create(base + "/logit/w2", affine_weight_init(spec.out_dim, 1, rng));
      store.create(base + "/logit/b2", affine_bias_init(spec.out_dim, 1, rng));
    }
  }
}

Tensor gat_forward(Tape& tape, TapeBinding& bind, const std::string& prefix,
                   const GatSpec& spec, const Graph& graph, const Tensor& x) {
  if (x.cols() != spec.in_dim)
    throw ConfigError("gat '" + prefix + "': input width mismatch");
  const std::int64_t n = graph.num_nodes;
  std::vector<std::int64_t> recv, send;
  attention_edges(graph, recv, send);

  Tensor acc;
  for (int h = 0; h < spec.heads; ++h) {
    const std::string base = prefix + "/head" + std::to_string(h);
    Tensor proj = tape.matmul(x, bind(base + "/W"));  // N x out

    Tensor logits;
    if (!spec.deep_logits) {
      Tensor s_recv = tape.matmul(proj, bind(base + "/a_recv"));  // N x 1
      Tensor s_send = tape.matmul(proj, bind(base + "/a_send"));
      logits = tape.leaky_relu(
          tape.add(tape.gather_rows(s_recv, recv), tape.gather_rows(s_send, send)), 0.2);
    } else {
      Tensor pair = tape.concat_cols(tape.gather_rows(proj, recv), tape.gather_rows(proj, send));
      Tensor hmid = tape.relu(
          tape.add(tape.matmul(pair, bind(base + "/logit/W")), bind(base + "/logit/b")));
      logits = tape.leaky_relu(
          tape.add(tape.matmul(hmid, bind(base + "/logit/w2")), bind(base + "/logit/b2")), 0.2);
    }

    Tensor alpha = tape.segment_softmax(logits, recv, n);
    Tensor msg = tape.rowwise_mul(tape.gather_rows(proj, send), alpha);
    Tensor head_out = tape.segment_sum(msg, recv, n);
    acc = (h == 0) ? head_out : tape.add(acc, head_out);
  }
  Tensor mean = tape.scale(acc, 1.0 / static_cast<double>(spec.heads));
  return spec.sigma_softmax ? tape.softmax_rows(mean) : tape.elu(mean);
}

void block_init(ParamStore& store, const std::string& prefix, const BlockSpec& spec,
                std::mt19937_64& rng) {
  MlpSpec edge_mlp{3 * spec.latent, spec.mlp_hidden, spec.latent, spec.mlp_layers, true};
  mlp_init(store, prefix + "/edge_mlp", edge_mlp, rng);
  if (spec.processor == NodeProcessor::kMlp) {
    MlpSpec node_mlp{2 * spec.latent, spec.mlp_hidden, spec.latent, spec.mlp_layers, true};
    mlp_init(store, prefix + "/node_mlp", node_mlp, rng);
  } else {
    GatSpec gat{2 * spec.latent, spec.latent, spec.heads, spec.gat_sigma_softmax,
                spec.gat_deep_logits};
    gat_init(store, prefix + "/gat", gat, rng);
  }
}

std::pair<Tensor, Tensor> block_forward(Tape& tape, TapeBinding& bind,
                                        const std::string& prefix, const BlockSpec& spec,
                                        const Graph& graph, const Tensor& v, const Tensor& e) {
  if (v.cols() != spec.latent || e.cols() != spec.latent)
    throw ConfigError("block '" + prefix + "': latent width mismatch");
  if (v.rows() != graph.num_nodes || e.rows() != graph.num_edges())
    throw StructuralError("block '" + prefix + "': latent row counts disagree with graph");

  // edge update: f^e on [e_k, v_r, v_s]
  Tensor vr = tape.gather_rows(v, graph.receivers);
  Tensor vs = tape.gather_rows(v, graph.senders);
  Tensor edge_in = tape.concat_cols(tape.concat_cols(e, vr), vs);
  MlpSpec edge_mlp{3 * spec.latent, spec.mlp_hidden, spec.latent, spec.mlp_layers, true};
  Tensor e_upd = mlp_forward(tape, bind, prefix + "/edge_mlp", edge_mlp, edge_in);
  Tensor e_out = spec.residual ? tape.add(e, e_upd) : e_upd;

  // aggregate updated edges per receiver; zero rows for isolated nodes
  Tensor agg = tape.segment_sum(e_out, graph.receivers, graph.num_nodes);
  Tensor v_tilde = tape.concat_cols(v, agg);

  Tensor v_upd;
  if (spec.processor == NodeProcessor::kMlp) {
    MlpSpec node_mlp{2 * spec.latent, spec.mlp_hidden, spec.latent, spec.mlp_layers, true};
    v_upd = mlp_forward(tape, bind, prefix + "/node_mlp", node_mlp, v_tilde);
  } else {
    GatSpec gat{2 * spec.latent, spec.latent, spec.heads, spec.gat_sigma_softmax,
                spec.gat_deep_logits};
    v_upd = gat_forward(tape, bind, prefix + "/gat", gat, graph, v_tilde);
  }
  Tensor v_out = spec.residual ? tape.add(v, v_upd) : v_upd;
  return {v_out, e_out};
}

}  // namespace mc
