#include "meshcycle/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "meshcycle/common.hpp"

namespace mc {

using ad::Tape;
using ad::TapeBinding;
using ad::Tensor;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch size must be at least 1");
  if (!(mask_keep_ratio > 0.0) || mask_keep_ratio > 1.0)
    throw ConfigError("train: mask keep ratio must lie in (0, 1]");
  if (lr_end > lr_start) throw ConfigError("train: lr_end must not exceed lr_start");
  if (self_conditioning_p < 0.0 || self_conditioning_p > 1.0)
    throw ConfigError("train: self-conditioning probability must lie in [0, 1]");
}

double lr_at(std::int64_t step, const TrainConfig& cfg) {
  if (cfg.total_steps <= 0) return cfg.lr_start;
  const std::int64_t window =
      cfg.decay_window > 0 ? std::min(cfg.decay_window, cfg.total_steps)
                           : cfg.total_steps - cfg.total_steps / 2;
  const std::int64_t decay_start = cfg.total_steps - window;
  if (step <= decay_start) return cfg.lr_start;
  double frac = static_cast<double>(step - decay_start) / static_cast<double>(window);
  frac = std::min(frac, 1.0);
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, frac);
}

std::vector<double> resolve_noise_sigma(const TrainConfig& cfg,
                                        const std::vector<std::string>& field_names) {
  if (!cfg.noise_per_channel.empty()) {
    if (cfg.noise_per_channel.size() != field_names.size())
      throw ConfigError("train: noise_per_channel length does not match the field schema");
    return cfg.noise_per_channel;
  }
  std::vector<double> sigma(field_names.size(), cfg.noise_sigma);
  for (std::size_t i = 0; i < field_names.size(); ++i)
    if (field_names[i] == "pressure") sigma[i] = 0.0;
  return sigma;
}

Tensor add_noise(const Tensor& fields, const std::vector<double>& sigma,
                 const std::vector<std::uint8_t>& dynamic_rows, std::mt19937_64& rng) {
  const std::int64_t n = fields.rows(), f = fields.cols();
  if (static_cast<std::int64_t>(sigma.size()) != f)
    throw StructuralError("add_noise: sigma width mismatch");
  if (static_cast<std::int64_t>(dynamic_rows.size()) != n)
    throw StructuralError("add_noise: row mask length mismatch");
  for (double s : sigma)
    if (s < 0.0) throw ConfigError("add_noise: sigma must be nonnegative");

  Tensor out = fields.clone();
  bool any = false;
  for (double s : sigma) any |= s > 0.0;
  if (!any) return out;

  std::normal_distribution<double> dist(0.0, 1.0);
  auto od = out.data_mut();
  for (std::int64_t r = 0; r < n; ++r) {
    if (!dynamic_rows[static_cast<std::size_t>(r)]) continue;
    for (std::int64_t c = 0; c < f; ++c)
      if (sigma[static_cast<std::size_t>(c)] > 0.0)
        od[r * f + c] += sigma[static_cast<std::size_t>(c)] * dist(rng);
  }
  return out;
}

std::vector<std::int64_t> mask_nodes(std::int64_t num_nodes, double keep_ratio,
                                     std::mt19937_64& rng) {
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0)
    throw ConfigError("mask_nodes: keep ratio must lie in (0, 1]");
  auto k = static_cast<std::int64_t>(
      std::llround(keep_ratio * static_cast<double>(num_nodes)));
  k = std::max<std::int64_t>(k, 1);
  std::vector<std::int64_t> ids(static_cast<std::size_t>(num_nodes));
  std::iota(ids.begin(), ids.end(), 0);
  for (std::int64_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::int64_t> pick(i, num_nodes - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(pick(rng))]);
  }
  ids.resize(static_cast<std::size_t>(k));
  std::sort(ids.begin(), ids.end());
  return ids;
}

TrajCache build_cache(const Trajectory& traj) {
  TrajCache cache;
  cache.traj = &traj;
  cache.graph = build_graph(traj.mesh);
  cache.raw_edges = edge_features(traj.mesh.positions, cache.graph);

  const std::int64_t n = traj.mesh.num_nodes();
  const auto g = static_cast<std::int64_t>(traj.globals.size());
  cache.static_cols = Tensor(n, kNodeTypeCount + g);
  auto sd = cache.static_cols.data_mut();
  cache.dynamic.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto type = traj.mesh.node_type[static_cast<std::size_t>(i)];
    sd[i * (kNodeTypeCount + g) + type] = 1.0;
    for (std::int64_t j = 0; j < g; ++j)
      sd[i * (kNodeTypeCount + g) + kNodeTypeCount + j] = traj.globals[j].second;
    cache.dynamic[static_cast<std::size_t>(i)] = is_boundary(type) ? 0 : 1;
  }
  return cache;
}

Tensor assemble_node_input(const Tensor& state, const TrajCache& cache) {
  const std::int64_t n = state.rows(), f = state.cols();
  const std::int64_t s = cache.static_cols.cols();
  Tensor out(n, f + s);
  auto od = out.data_mut();
  auto st = state.data();
  auto sc = cache.static_cols.data();
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(st.data() + i * f, f, od.data() + i * (f + s));
    std::copy_n(sc.data() + i * s, s, od.data() + i * (f + s) + f);
  }
  return out;
}

EdgeEncoder normalized_edge_featurizer(const Normalizer& edge_norm) {
  return [&edge_norm](Tape&, const Graph& g, const Tensor& pos) {
    return edge_norm.normalize(edge_features(pos, g));
  };
}

MetricsLog::MetricsLog(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw StructuralError("cannot open metrics log: " + path);
  if (out_.tellp() == 0) out_ << "step,phase,loss,lr\n";
}

void MetricsLog::append(std::int64_t step, const std::string& phase, double loss, double lr) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g\n", static_cast<long long>(step),
                phase.c_str(), loss, lr);
  out_ << buf;
  out_.flush();
}

namespace {

Tensor stack_rows(const std::vector<Tensor>& blocks) {
  std::int64_t rows = 0;
  const std::int64_t cols = blocks.empty() ? 0 : blocks.front().cols();
  for (const auto& b : blocks) rows += b.rows();
  Tensor out(rows, cols);
  auto od = out.data_mut();
  std::int64_t at = 0;
  for (const auto& b : blocks) {
    std::copy_n(b.data().data(), b.size(), od.data() + at);
    at += b.size();
  }
  return out;
}

constexpr const char* kPhaseNames[] = {"plain", "pretrain", "finetune"};

}  // namespace

Trainer::Trainer(const Model& model, ad::ParamStore& store, Normalizers& norms,
                 const std::vector<Trajectory>& data, TrainConfig cfg)
    : model_(model), store_(store), norms_(norms), data_(data), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (data_.empty()) throw ConfigError("trainer: empty dataset");

  const auto& first = data_.front();
  const auto f = first.num_fields();
  const auto g = static_cast<std::int64_t>(first.globals.size());
  const int expect_node_in = static_cast<int>(f + kNodeTypeCount + g);
  const int expect_edge_in = first.mesh.dim() + 1;
  if (model_.config().node_in_dim != expect_node_in)
    throw ConfigError("trainer: model node input width " +
                      std::to_string(model_.config().node_in_dim) + ", data needs " +
                      std::to_string(expect_node_in));
  if (model_.config().edge_in_dim != expect_edge_in)
    throw ConfigError("trainer: model edge input width mismatch");
  if (model_.config().out_dim != static_cast<int>(f))
    throw ConfigError("trainer: model output width must equal the dynamic field count");

  if (norms_.node.width() == 0) norms_.node = Normalizer(expect_node_in);
  if (norms_.edge.width() == 0) norms_.edge = Normalizer(expect_edge_in);
  if (norms_.target.width() == 0) norms_.target = Normalizer(f);

  double extent = 0.0;
  for (const auto& traj : data_) {
    caches_.push_back(build_cache(traj));
    auto p = traj.mesh.positions.data();
    for (int d = 0; d < traj.mesh.dim(); ++d) {
      double lo = p[d], hi = p[d];
      for (std::int64_t i = 0; i < traj.mesh.num_nodes(); ++i) {
        lo = std::min(lo, p[i * traj.mesh.dim() + d]);
        hi = std::max(hi, p[i * traj.mesh.dim() + d]);
      }
      extent = std::max(extent, hi - lo);
    }
    if (traj.num_frames() < 2) throw ConfigError("trainer: trajectory with fewer than 2 frames");
    if (traj.num_fields() != f) throw ConfigError("trainer: inconsistent field schema");
  }
  island_shift_ = 8.0 * std::max(extent, 1.0);

  noise_sigma_ = resolve_noise_sigma(cfg_, first.field_names);
  data_rng_ = make_rng(cfg_.seed, "data");
  noise_rng_ = make_rng(cfg_.seed, "noise");
  mask_rng_ = make_rng(cfg_.seed, "mask");
  selfcond_rng_ = make_rng(cfg_.seed, "selfcond");

  for (int t = 0; t < static_cast<int>(data_.size()); ++t)
    for (int fr = 0; fr + 1 < data_[static_cast<std::size_t>(t)].num_frames(); ++fr)
      epoch_.push_back({t, fr});
  cursor_ = epoch_.size();  // force a shuffle before the first draw
}

std::vector<Sample> Trainer::draw_batch() {
  std::vector<Sample> batch;
  for (int b = 0; b < cfg_.batch_size; ++b) {
    if (cursor_ >= epoch_.size()) {
      std::shuffle(epoch_.begin(), epoch_.end(), data_rng_);
      cursor_ = 0;
    }
    batch.push_back(epoch_[cursor_++]);
  }
  return batch;
}

double Trainer::step() {
  auto batch = draw_batch();
  const double loss = compute_grads(batch);
  apply_update();
  ++step_;
  return loss;
}

void Trainer::resume_to(std::int64_t step, std::int64_t samples_seen) {
  if (step_ != 0) throw ConfigError("resume_to: trainer already advanced");
  const bool masked =
      cfg_.phase == TrainConfig::Phase::kMaskedPretrain && cfg_.mask_keep_ratio < 1.0;
  for (std::int64_t s = 0; s < step; ++s) {
    if (cfg_.phase == TrainConfig::Phase::kFinetune && cfg_.self_conditioning_p > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      u(selfcond_rng_);
    }
    for (const auto& sample : draw_batch()) {
      const auto& cache = caches_[static_cast<std::size_t>(sample.traj)];
      const auto& traj = data_[static_cast<std::size_t>(sample.traj)];
      // replay the exact draw sequence of a real step
      add_noise(traj.frames[static_cast<std::size_t>(sample.frame)], noise_sigma_,
                cache.dynamic, noise_rng_);
      if (masked) mask_nodes(cache.graph.num_nodes, cfg_.mask_keep_ratio, mask_rng_);
    }
  }
  step_ = step;
  samples_seen_ = samples_seen;
}

double Trainer::compute_grads(const std::vector<Sample>& batch) {
  store_.zero_grads();
  if (cfg_.phase == TrainConfig::Phase::kFinetune && cfg_.self_conditioning_p > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(selfcond_rng_) >= cfg_.self_conditioning_p) return grads_two_step(batch);
  }
  const bool masked =
      cfg_.phase == TrainConfig::Phase::kMaskedPretrain && cfg_.mask_keep_ratio < 1.0;
  return grads_one_step(batch, masked);
}

double Trainer::grads_one_step(const std::vector<Sample>& batch, bool masked) {
  struct Part {
    const TrajCache* cache = nullptr;
    Tensor node_raw;
    Tensor target_raw;
    std::vector<std::int64_t> kept;
    Subgraph sub;
    InterpPlan plan;
  };
  std::vector<Part> parts;

  for (const auto& s : batch) {
    const auto& cache = caches_[static_cast<std::size_t>(s.traj)];
    const auto& traj = data_[static_cast<std::size_t>(s.traj)];
    Part p;
    p.cache = &cache;
    Tensor noisy = add_noise(traj.frames[static_cast<std::size_t>(s.frame)], noise_sigma_,
                             cache.dynamic, noise_rng_);
    const auto& next = traj.frames[static_cast<std::size_t>(s.frame) + 1];
    p.target_raw = Tensor(noisy.rows(), noisy.cols());
    for (std::int64_t i = 0; i < noisy.size(); ++i)
      p.target_raw.data_mut()[i] = next.data()[i] - noisy.data()[i];
    p.node_raw = assemble_node_input(noisy, cache);

    if (!norms_.node.frozen() && samples_seen_ < cfg_.normalizer_warmup) {
      norms_.node.accumulate(p.node_raw);
      norms_.edge.accumulate(cache.raw_edges);
      norms_.target.accumulate(p.target_raw);
    }
    ++samples_seen_;
    if (samples_seen_ >= cfg_.normalizer_warmup) {
      norms_.node.freeze();
      norms_.edge.freeze();
      norms_.target.freeze();
    }

    if (masked) {
      const std::int64_t n = cache.graph.num_nodes;
      p.kept = mask_nodes(n, cfg_.mask_keep_ratio, mask_rng_);
      p.sub = induced_subgraph(cache.graph, p.kept);
    }
    parts.push_back(std::move(p));
  }

  // disjoint union of the (possibly reduced) graphs
  Graph ug;
  std::vector<Tensor> node_blocks, edge_blocks, target_blocks, pos_blocks;
  std::vector<std::uint8_t> fine_dyn;
  std::vector<std::int64_t> interp_idx;
  std::vector<double> interp_w;
  std::int64_t fan = 0;
  if (masked)
    for (auto& p : parts) {
      Tensor kept_pos(static_cast<std::int64_t>(p.kept.size()), 2);
      const auto& mesh = p.cache->traj->mesh;
      for (std::size_t i = 0; i < p.kept.size(); ++i)
        for (int d = 0; d < 2; ++d)
          kept_pos.at_mut(static_cast<std::int64_t>(i), d) = mesh.positions.at(p.kept[i], d);
      p.plan = knn_interp_plan(kept_pos, mesh.positions, model_.config().knn_neighbors);
      fan = std::max(fan, p.plan.fan);
    }

  std::int64_t red_offset = 0;
  for (auto& p : parts) {
    const Graph& g = masked ? p.sub.graph : p.cache->graph;
    const std::int64_t n_red = g.num_nodes;
    for (std::int64_t k = 0; k < g.num_edges(); ++k) {
      ug.receivers.push_back(g.receivers[k] + red_offset);
      ug.senders.push_back(g.senders[k] + red_offset);
    }

    Tensor node_norm = norms_.node.normalize(p.node_raw);
    const auto& mesh = p.cache->traj->mesh;
    Tensor pos(n_red, 2);
    const double shift = island_shift_ * static_cast<double>(&p - parts.data());
    if (masked) {
      Tensor reduced_nodes(n_red, node_norm.cols());
      for (std::int64_t i = 0; i < n_red; ++i) {
        for (std::int64_t c = 0; c < node_norm.cols(); ++c)
          reduced_nodes.at_mut(i, c) = node_norm.at(p.kept[static_cast<std::size_t>(i)], c);
        pos.at_mut(i, 0) = mesh.positions.at(p.kept[static_cast<std::size_t>(i)], 0) + shift;
        pos.at_mut(i, 1) = mesh.positions.at(p.kept[static_cast<std::size_t>(i)], 1);
      }
      node_blocks.push_back(reduced_nodes);
      Tensor red_pos_plain(n_red, 2);
      for (std::int64_t i = 0; i < n_red; ++i) {
        red_pos_plain.at_mut(i, 0) = mesh.positions.at(p.kept[static_cast<std::size_t>(i)], 0);
        red_pos_plain.at_mut(i, 1) = mesh.positions.at(p.kept[static_cast<std::size_t>(i)], 1);
      }
      edge_blocks.push_back(norms_.edge.normalize(edge_features(red_pos_plain, p.sub.graph)));
      for (std::int64_t i = 0; i < p.plan.fine_rows; ++i)
        for (std::int64_t fidx = 0; fidx < fan; ++fidx) {
          if (fidx < p.plan.fan) {
            interp_idx.push_back(p.plan.idx[i * p.plan.fan + fidx] + red_offset);
            interp_w.push_back(p.plan.weights[i * p.plan.fan + fidx]);
          } else {
            interp_idx.push_back(red_offset);
            interp_w.push_back(0.0);
          }
        }
    } else {
      node_blocks.push_back(node_norm);
      for (std::int64_t i = 0; i < n_red; ++i) {
        pos.at_mut(i, 0) = mesh.positions.at(i, 0) + shift;
        pos.at_mut(i, 1) = mesh.positions.at(i, 1);
      }
      edge_blocks.push_back(norms_.edge.normalize(p.cache->raw_edges));
    }
    pos_blocks.push_back(pos);
    target_blocks.push_back(norms_.target.normalize(p.target_raw));
    fine_dyn.insert(fine_dyn.end(), p.cache->dynamic.begin(), p.cache->dynamic.end());
    red_offset += n_red;
  }
  ug.num_nodes = red_offset;

  Tape tape;
  TapeBinding bind(tape, store_);
  Tensor pred = model_.forward(tape, bind, ug, stack_rows(pos_blocks),
                               stack_rows(node_blocks), stack_rows(edge_blocks),
                               normalized_edge_featurizer(norms_.edge));
  Tensor pred_fine = pred;
  if (masked) {
    std::int64_t fine_rows = 0;
    for (const auto& p : parts) fine_rows += p.plan.fine_rows;
    pred_fine = tape.weighted_gather_sum(pred, interp_idx, interp_w, fine_rows, fan);
  }
  Tensor loss = tape.l2_loss(pred_fine, stack_rows(target_blocks), fine_dyn);
  tape.backward(loss);
  bind.collect_grads();
  return loss.value();
}

double Trainer::grads_two_step(const std::vector<Sample>& batch) {
  // two model applications: predict t-1 -> t, integrate, then predict t -> t+1
  struct Part {
    const TrajCache* cache = nullptr;
    Tensor start_raw;   // noisy state at t-1
    Tensor truth_t;     // boundary values at t
    Tensor truth_next;  // state at t+1
  };
  std::vector<Part> parts;
  for (const auto& s : batch) {
    const auto& cache = caches_[static_cast<std::size_t>(s.traj)];
    const auto& traj = data_[static_cast<std::size_t>(s.traj)];
    const int t = std::max(s.frame, 1);
    Part p;
    p.cache = &cache;
    p.start_raw = add_noise(traj.frames[static_cast<std::size_t>(t) - 1], noise_sigma_,
                            cache.dynamic, noise_rng_);
    p.truth_t = traj.frames[static_cast<std::size_t>(t)];
    p.truth_next = traj.frames[static_cast<std::size_t>(t) + 1];
    ++samples_seen_;
    parts.push_back(std::move(p));
  }

  const std::int64_t f = model_.config().out_dim;
  // union graph and constant blocks
  Graph ug;
  std::vector<Tensor> pos_blocks, static_norm_blocks, start_blocks, truth_t_blocks,
      truth_next_blocks, edge_blocks;
  std::vector<std::uint8_t> dyn_rows;
  std::int64_t offset = 0;
  for (auto& p : parts) {
    const Graph& g = p.cache->graph;
    for (std::int64_t k = 0; k < g.num_edges(); ++k) {
      ug.receivers.push_back(g.receivers[k] + offset);
      ug.senders.push_back(g.senders[k] + offset);
    }
    const auto& mesh = p.cache->traj->mesh;
    const double shift = island_shift_ * static_cast<double>(&p - parts.data());
    Tensor pos(g.num_nodes, 2);
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
      pos.at_mut(i, 0) = mesh.positions.at(i, 0) + shift;
      pos.at_mut(i, 1) = mesh.positions.at(i, 1);
    }
    pos_blocks.push_back(pos);
    // the static node-input columns, normalized with the node stats
    Tensor assembled = assemble_node_input(Tensor(g.num_nodes, f), *p.cache);
    Tensor norm_static = norms_.node.normalize(assembled);
    Tensor static_only(g.num_nodes, norm_static.cols() - f);
    for (std::int64_t i = 0; i < g.num_nodes; ++i)
      for (std::int64_t c = f; c < norm_static.cols(); ++c)
        static_only.at_mut(i, c - f) = norm_static.at(i, c);
    static_norm_blocks.push_back(static_only);
    start_blocks.push_back(p.start_raw);
    truth_t_blocks.push_back(p.truth_t);
    truth_next_blocks.push_back(p.truth_next);
    edge_blocks.push_back(norms_.edge.normalize(p.cache->raw_edges));
    dyn_rows.insert(dyn_rows.end(), p.cache->dynamic.begin(), p.cache->dynamic.end());
    offset += g.num_nodes;
  }
  ug.num_nodes = offset;

  const auto node_mu = norms_.node.mean();
  const auto node_sd = norms_.node.stdev();
  Tensor neg_mu(1, f), inv_sd(1, f);
  for (std::int64_t c = 0; c < f; ++c) {
    neg_mu.at_mut(0, c) = -node_mu[static_cast<std::size_t>(c)];
    inv_sd.at_mut(0, c) = 1.0 / node_sd[static_cast<std::size_t>(c)];
  }
  const auto t_mu = norms_.target.mean();
  const auto t_sd = norms_.target.stdev();
  Tensor t_mu_row(1, f), t_sd_row(1, f), t_neg_mu(1, f), t_inv_sd(1, f);
  for (std::int64_t c = 0; c < f; ++c) {
    t_mu_row.at_mut(0, c) = t_mu[static_cast<std::size_t>(c)];
    t_sd_row.at_mut(0, c) = t_sd[static_cast<std::size_t>(c)];
    t_neg_mu.at_mut(0, c) = -t_mu[static_cast<std::size_t>(c)];
    t_inv_sd.at_mut(0, c) = 1.0 / t_sd[static_cast<std::size_t>(c)];
  }

  Tensor start = stack_rows(start_blocks);
  Tensor truth_t = stack_rows(truth_t_blocks);
  Tensor truth_next = stack_rows(truth_next_blocks);
  Tensor statics = stack_rows(static_norm_blocks);
  Tensor positions = stack_rows(pos_blocks);
  Tensor edges = stack_rows(edge_blocks);
  Tensor dyn_col(ug.num_nodes, 1), bnd_col(ug.num_nodes, 1);
  for (std::int64_t i = 0; i < ug.num_nodes; ++i) {
    dyn_col.at_mut(i, 0) = dyn_rows[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    bnd_col.at_mut(i, 0) = dyn_rows[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
  }

  Tape tape;
  TapeBinding bind(tape, store_);
  auto featurize = normalized_edge_featurizer(norms_.edge);

  auto normalize_state = [&](const Tensor& state_t) {
    return tape.colwise_mul(tape.add(state_t, neg_mu), inv_sd);
  };

  // pass 1 from the (constant) start state
  Tensor node_in1 = tape.concat_cols(normalize_state(start), statics);
  Tensor pred1 = model_.forward(tape, bind, ug, positions, node_in1, edges, featurize);
  Tensor delta1 = tape.add(tape.colwise_mul(pred1, t_sd_row), t_mu_row);
  Tensor integrated = tape.add(start, delta1);
  Tensor state1 = tape.add(tape.rowwise_mul(integrated, dyn_col),
                           tape.rowwise_mul(truth_t, bnd_col));

  // pass 2 from the predicted state; the target follows the predicted state
  Tensor node_in2 = tape.concat_cols(normalize_state(state1), statics);
  Tensor pred2 = model_.forward(tape, bind, ug, positions, node_in2, edges, featurize);
  Tensor raw_target = tape.add(truth_next, tape.scale(state1, -1.0));
  Tensor target2 = tape.colwise_mul(tape.add(raw_target, t_neg_mu), t_inv_sd);

  Tensor loss = tape.l2_loss(pred2, target2, dyn_rows);
  tape.backward(loss);
  bind.collect_grads();
  return loss.value();
}

void Trainer::run(std::int64_t steps, MetricsLog* log, const std::string& phase_tag,
                  const std::string& diagnostic_path) {
  for (std::int64_t i = 0; i < steps; ++i) {
    const double lr = current_lr();
    try {
      const double loss = step();
      if (log) log->append(step_ - 1, phase_tag, loss, lr);
    } catch (const NumericalError&) {
      if (!diagnostic_path.empty())
        save_training_state(diagnostic_path, store_, adam_, norms_, step_, phase_tag,
                            model_config_guard(model_.config()));
      throw;
    }
  }
}

TwoPhaseResult run_two_phase(const Model& model, ad::ParamStore& store, Normalizers& norms,
                             const std::vector<Trajectory>& data, const TrainConfig& base,
                             std::int64_t pretrain_steps, std::int64_t finetune_steps,
                             const std::string& out_dir, MetricsLog* log) {
  std::filesystem::create_directories(out_dir);
  const std::string guard = model_config_guard(model.config());
  TwoPhaseResult res;

  {
    TrainConfig p1 = base;
    p1.phase = TrainConfig::Phase::kMaskedPretrain;
    p1.total_steps = pretrain_steps;
    Trainer trainer(model, store, norms, data, p1);
    trainer.run(pretrain_steps, log, "pretrain", out_dir + "/diagnostic.mcckpt");
    res.pretrain_checkpoint = out_dir + "/phase1.mcckpt";
    save_training_state(res.pretrain_checkpoint, store, trainer.optimizer(), norms,
                        pretrain_steps, "pretrain", guard);
  }
  {
    TrainConfig p2 = base;
    p2.phase = TrainConfig::Phase::kFinetune;
    p2.total_steps = finetune_steps;
    p2.seed = base.seed + 1;  // fresh sample/noise streams for the second phase
    Trainer trainer(model, store, norms, data, p2);
    trainer.run(finetune_steps, log, "finetune", out_dir + "/diagnostic.mcckpt");
    res.final_checkpoint = out_dir + "/final.mcckpt";
    save_training_state(res.final_checkpoint, store, trainer.optimizer(), norms,
                        finetune_steps, "finetune", guard);
  }
  return res;
}

void save_training_state(const std::string& path, const ad::ParamStore& store,
                         const Adam& adam, const Normalizers& norms, std::int64_t step,
                         const std::string& phase, const std::string& config_guard,
                         std::int64_t samples_seen) {
  Checkpoint ckpt;
  ckpt.config_guard = config_guard;
  for (const auto& name : store.names()) {
    const auto& e = store.entry(name);
    ckpt.put("param/" + name, e.value.shape(),
             std::vector<double>(e.value.data().begin(), e.value.data().end()));
  }
  adam.to_checkpoint(store, ckpt, "opt");
  norms.node.to_checkpoint(ckpt, "norm/node");
  norms.edge.to_checkpoint(ckpt, "norm/edge");
  norms.target.to_checkpoint(ckpt, "norm/target");
  ckpt.put_scalar("meta/step", static_cast<double>(step));
  ckpt.put_scalar("meta/samples_seen", static_cast<double>(samples_seen));
  int phase_id = 0;
  for (int i = 0; i < 3; ++i)
    if (phase == kPhaseNames[i]) phase_id = i;
  ckpt.put_scalar("meta/phase", phase_id);
  save_checkpoint(path, ckpt);
}

void load_training_state(const std::string& path, ad::ParamStore& store, Adam& adam,
                         Normalizers& norms, std::int64_t& step, std::string& phase,
                         const std::string& expected_guard, std::int64_t* samples_seen) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!expected_guard.empty() && ckpt.config_guard != expected_guard)
    throw ConfigError("checkpoint '" + path + "' was written for a different configuration (" +
                      ckpt.config_guard + ")");
  for (const auto& name : store.names()) {
    auto& e = store.entry(name);
    const auto& data = ckpt.data("param/" + name);
    if (ckpt.shape("param/" + name) != e.value.shape())
      throw ConfigError("checkpoint parameter shape mismatch for " + name);
    std::copy(data.begin(), data.end(), e.value.data_mut().begin());
  }
  adam.from_checkpoint(store, ckpt, "opt");
  norms.node = Normalizer::from_checkpoint(ckpt, "norm/node");
  norms.edge = Normalizer::from_checkpoint(ckpt, "norm/edge");
  norms.target = Normalizer::from_checkpoint(ckpt, "norm/target");
  step = static_cast<std::int64_t>(ckpt.scalar("meta/step"));
  phase = kPhaseNames[static_cast<int>(ckpt.scalar("meta/phase")) % 3];
  if (samples_seen)
    *samples_seen = ckpt.has("meta/samples_seen")
                        ? static_cast<std::int64_t>(ckpt.scalar("meta/samples_seen"))
                        : 0;
}

}  // namespace mc
