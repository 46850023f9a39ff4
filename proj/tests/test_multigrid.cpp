#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "meshcycle/common.hpp"
#include "meshcycle/model.hpp"
#include "meshcycle/multigrid.hpp"

using namespace mc;
using ad::ParamStore;
using ad::Tape;
using ad::TapeBinding;
using ad::Tensor;

namespace {

Tensor random_tensor(std::int64_t r, std::int64_t c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Tensor t(r, c);
  for (auto& v : t.data_mut()) v = dist(rng);
  return t;
}

// jittered triangulated strip: 2*(nx-1) triangles over 2 rows of nx nodes
Mesh strip_mesh(int nx, std::mt19937_64& rng, double jitter = 0.15) {
  std::uniform_real_distribution<double> j(-jitter, jitter);
  std::vector<double> pos;
  for (int row = 0; row < 2; ++row)
    for (int i = 0; i < nx; ++i) {
      pos.push_back(i + j(rng));
      pos.push_back(row + j(rng));
    }
  std::vector<std::int64_t> cells;
  for (int i = 0; i + 1 < nx; ++i) {
    cells.insert(cells.end(), {i, i + 1, nx + i});
    cells.insert(cells.end(), {i + 1, nx + i, nx + i + 1});
  }
  Mesh m;
  m.positions = Tensor::from({2 * nx, 2}, std::move(pos));
  m.cells = std::move(cells);
  m.simplex_size = 3;
  m.node_type.assign(static_cast<std::size_t>(2 * nx), 0);
  return m;
}

void copy_params(ParamStore& src, const std::string& src_prefix, ParamStore& dst,
                 const std::string& dst_prefix) {
  for (const auto& name : src.names()) {
    if (name.rfind(src_prefix, 0) != 0) continue;
    const std::string suffix = name.substr(src_prefix.size());
    auto s = src.entry(name).value.data();
    auto d = dst.entry(dst_prefix + suffix).value.data_mut();
    REQUIRE(s.size() == d.size());
    std::copy(s.begin(), s.end(), d.begin());
  }
}

}  // namespace

TEST_CASE("cycle spec parsing") {
  auto v = CycleSpec::parse("4D10U1");
  CHECK(v.count(CycleSpec::Token::kMessage) == 15);
  CHECK(v.count(CycleSpec::Token::kDown) == 1);
  CHECK(v.count(CycleSpec::Token::kUp) == 1);
  CHECK(v.depth() == 1);
  CHECK(v.str() == "MMMMDMMMMMMMMMMUM");

  auto w = CycleSpec::parse("3D4U3D4U1");
  CHECK(w.count(CycleSpec::Token::kMessage) == 15);
  CHECK(w.count(CycleSpec::Token::kDown) == 2);
  CHECK(w.depth() == 1);

  auto v2 = CycleSpec::parse("2D2D4U2U3");  // depth-2 V shape
  CHECK(v2.depth() == 2);

  CHECK(CycleSpec::parse("15").count(CycleSpec::Token::kMessage) == 15);
  CHECK(CycleSpec::parse("MMDMU").tokens.size() == 5);

  CHECK_THROWS_AS(CycleSpec::parse("U1D"), ConfigError);
  CHECK_THROWS_AS(CycleSpec::parse("2D1"), ConfigError);
  CHECK_THROWS_AS(CycleSpec::parse("2X3"), ConfigError);
}

TEST_CASE("attention scores: symmetric graph with identical features is uniform") {
  // two nodes, one edge: both nodes see identical structure and features
  Graph g;
  g.num_nodes = 2;
  g.receivers = {0, 1};
  g.senders = {1, 0};

  BlockSpec blk{4, 8, 1, NodeProcessor::kMlp, 1, true, false, false};
  ParamStore store;
  auto rng = make_rng(40, "pool");
  pooling_init(store, "pool", blk, rng);

  Tensor row = random_tensor(1, 4, rng);
  Tensor v(2, 4);
  for (int c = 0; c < 4; ++c) {
    v.at_mut(0, c) = row.at(0, c);
    v.at_mut(1, c) = row.at(0, c);
  }
  Tensor erow = random_tensor(1, 4, rng);
  Tensor e(2, 4);
  for (int c = 0; c < 4; ++c) {
    e.at_mut(0, c) = erow.at(0, c);
    e.at_mut(1, c) = erow.at(0, c);
  }

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor y = attention_scores(tape, bind, "pool", blk, g, v, e);
  CHECK(std::abs(y.at(0, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(y.at(1, 0) - 0.5) <= 1e-12);
}

TEST_CASE("attention scores: singleton graph scores exactly one") {
  Graph g;
  g.num_nodes = 1;
  BlockSpec blk{4, 8, 1, NodeProcessor::kMlp, 1, true, false, false};
  ParamStore store;
  auto rng = make_rng(41, "pool1");
  pooling_init(store, "pool", blk, rng);
  Tape tape;
  TapeBinding bind(tape, store);
  Tensor y = attention_scores(tape, bind, "pool", blk, g, random_tensor(1, 4, rng),
                              Tensor(0, 4));
  CHECK(y.at(0, 0) == 1.0);
}

TEST_CASE("attention scores: match the explicit softmax recomputation") {
  auto rng = make_rng(42, "pool20");
  Mesh m = strip_mesh(10, rng);
  Graph g = build_graph(m);
  REQUIRE(g.num_nodes == 20);

  BlockSpec blk{6, 8, 1, NodeProcessor::kGat, 2, true, false, false};
  ParamStore store;
  auto rng2 = make_rng(43, "poolw");
  pooling_init(store, "pool", blk, rng2);

  Tensor v = random_tensor(20, 6, rng);
  Tensor e = random_tensor(g.num_edges(), 6, rng);

  // the same block output, produced independently of the pooling path
  Tape tape_x;
  TapeBinding bind_x(tape_x, store);
  auto [x, e2] = block_forward(tape_x, bind_x, "pool/blk", blk, g, v, e);
  (void)e2;

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor y = attention_scores(tape, bind, "pool", blk, g, v, e);

  const auto& p = store.entry("pool/p_vec").value;
  double nrm = 0.0;
  for (double pv : p.data()) nrm += pv * pv;
  nrm = std::sqrt(nrm);
  std::vector<double> s(20, 0.0);
  double mx = -1e300;
  for (int i = 0; i < 20; ++i) {
    for (int c = 0; c < 6; ++c) s[i] += x.at(i, c) * p.at(c, 0) / nrm;
    mx = std::max(mx, s[i]);
  }
  double total = 0.0;
  for (auto& si : s) {
    si = std::exp(si - mx);
    total += si;
  }
  double sum_y = 0.0;
  for (int i = 0; i < 20; ++i) {
    CHECK(std::abs(y.at(i, 0) - s[i] / total) <= 1e-13);
    sum_y += y.at(i, 0);
  }
  CHECK(std::abs(sum_y - 1.0) <= 1e-12);
}

TEST_CASE("top_k: cardinality, ordering, ties, and the sort oracle") {
  auto rng = make_rng(44, "topk");

  SUBCASE("half ratio on two thousand scores") {
    Tensor scores = random_tensor(2000, 1, rng);
    auto kept = top_k_indices(scores, 0.5);
    CHECK(kept.size() == 1000);
    CHECK(std::is_sorted(kept.begin(), kept.end()));
  }

  SUBCASE("ratio one is the identity selection") {
    Tensor scores = random_tensor(17, 1, rng);
    auto kept = top_k_indices(scores, 1.0);
    CHECK(kept.size() == 17);
    for (std::int64_t i = 0; i < 17; ++i) CHECK(kept[i] == i);
  }

  SUBCASE("ties go to the lower index") {
    Tensor scores = Tensor::from({4, 1}, {0.5, 0.9, 0.5, 0.1});
    auto kept = top_k_indices(scores, 0.5);
    CHECK(kept == std::vector<std::int64_t>{0, 1});
  }

  SUBCASE("random instances match the full-sort oracle") {
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_int_distribution<std::int64_t> nd(2, 60);
      std::int64_t n = nd(rng);
      Tensor scores = random_tensor(n, 1, rng);
      std::uniform_real_distribution<double> rd(0.05, 1.0);
      double ratio = rd(rng);
      auto kept = top_k_indices(scores, ratio);

      std::vector<std::int64_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return scores.data()[a] > scores.data()[b];
      });
      auto k = static_cast<std::int64_t>(std::ceil(ratio * static_cast<double>(n)));
      std::vector<std::int64_t> expect(order.begin(), order.begin() + k);
      std::sort(expect.begin(), expect.end());
      CHECK(kept == expect);
    }
  }
}

TEST_CASE("knn interpolation: constant fields reproduce exactly") {
  auto rng = make_rng(45, "knnconst");
  Tensor coarse_pos = random_tensor(12, 2, rng);
  Tensor fine_pos = random_tensor(40, 2, rng);
  Tensor latents(12, 3);
  for (int i = 0; i < 12; ++i)
    for (int c = 0; c < 3; ++c) latents.at_mut(i, c) = 2.5 - c;

  Tape tape;
  Tensor out = knn_interpolate(tape, latents, coarse_pos, fine_pos, 3);
  for (int i = 0; i < 40; ++i)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out.at(i, c) - (2.5 - c)) <= 1e-12);
}

TEST_CASE("knn interpolation: coincident point copies its latent exactly") {
  auto rng = make_rng(46, "knncopy");
  Tensor coarse_pos = random_tensor(9, 2, rng);
  Tensor latents = random_tensor(9, 4, rng);
  Tensor fine_pos(2, 2);
  fine_pos.at_mut(0, 0) = coarse_pos.at(4, 0);
  fine_pos.at_mut(0, 1) = coarse_pos.at(4, 1);
  fine_pos.at_mut(1, 0) = 42.0;
  fine_pos.at_mut(1, 1) = -42.0;

  Tape tape;
  Tensor out = knn_interpolate(tape, latents, coarse_pos, fine_pos, 3);
  for (int c = 0; c < 4; ++c) CHECK(out.at(0, c) == latents.at(4, c));
}

TEST_CASE("knn interpolation matches the brute-force oracle") {
  auto rng = make_rng(47, "knnoracle");
  Tensor coarse_pos = random_tensor(30, 2, rng);
  Tensor fine_pos = random_tensor(100, 2, rng);
  Tensor latents = random_tensor(30, 5, rng);

  Tape tape;
  Tensor out = knn_interpolate(tape, latents, coarse_pos, fine_pos, 3);

  for (int i = 0; i < 100; ++i) {
    std::vector<std::pair<double, std::int64_t>> d;
    for (int j = 0; j < 30; ++j) {
      double dx = fine_pos.at(i, 0) - coarse_pos.at(j, 0);
      double dy = fine_pos.at(i, 1) - coarse_pos.at(j, 1);
      d.push_back({dx * dx + dy * dy, j});
    }
    std::sort(d.begin(), d.end());
    double wsum = 0.0;
    std::vector<double> expect(5, 0.0);
    if (d[0].first < 1e-24) {
      for (int c = 0; c < 5; ++c) expect[c] = latents.at(d[0].second, c);
    } else {
      for (int k = 0; k < 3; ++k) {
        double w = 1.0 / (d[k].first + 1e-9);
        wsum += w;
        for (int c = 0; c < 5; ++c) expect[c] += w * latents.at(d[k].second, c);
      }
      for (auto& v : expect) v /= wsum;
    }
    for (int c = 0; c < 5; ++c) CHECK(std::abs(out.at(i, c) - expect[c]) <= 1e-12);
  }
}

TEST_CASE("knn interpolation is positively homogeneous") {
  auto rng = make_rng(48, "knnhom");
  Tensor coarse_pos = random_tensor(8, 2, rng);
  Tensor fine_pos = random_tensor(20, 2, rng);
  Tensor latents = random_tensor(8, 3, rng);
  Tensor scaled(8, 3);
  for (std::int64_t i = 0; i < scaled.size(); ++i)
    scaled.data_mut()[i] = 3.25 * latents.data()[i];

  Tape tape;
  Tensor a = knn_interpolate(tape, latents, coarse_pos, fine_pos, 3);
  Tensor b = knn_interpolate(tape, scaled, coarse_pos, fine_pos, 3);
  for (std::int64_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(b.data()[i] - 3.25 * a.data()[i]) <= 1e-12);
}

TEST_CASE("degenerate cycle: ratio one then upscale adds the stored latents") {
  auto rng = make_rng(49, "degcycle");
  Mesh m = strip_mesh(4, rng);
  Graph g = build_graph(m);

  CycleConfig cfg;
  cfg.block = {4, 8, 1, NodeProcessor::kMlp, 1, true, false, false};
  cfg.pool_ratio = 1.0;
  cfg.gate = GateMode::kOff;
  cfg.upscale_residual = true;
  auto spec = CycleSpec::parse("DU");

  ParamStore store;
  auto rng2 = make_rng(50, "degw");
  cycle_init(store, "proc", cfg, spec, rng2);

  Tensor v = random_tensor(g.num_nodes, 4, rng);
  Tensor e = random_tensor(g.num_edges(), 4, rng);

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor out = run_cycle(tape, bind, "proc", cfg, spec, g, m.positions, v, e,
                         plain_edge_features());

  // stored fine latents = pool-block output X; result must be exactly 2X
  Tape tx;
  TapeBinding bx(tx, store);
  auto [x, ex] = block_forward(tx, bx, "proc/d0/pool/blk", cfg.block, g, v, e);
  (void)ex;
  for (std::int64_t i = 0; i < out.size(); ++i)
    CHECK(out.data()[i] == 2.0 * x.data()[i]);
}

TEST_CASE("cycle token accounting for the published schedules") {
  auto v = CycleSpec::parse("4D10U1");
  // 4 message tokens, one down, 10 message, one up, one message
  std::string expect = "MMMMDMMMMMMMMMMUM";
  CHECK(v.str() == expect);
  auto w = CycleSpec::parse("3D4U3D4U1");
  CHECK(w.str() == "MMMDMMMMUMMMDMMMMUM");
  CHECK(w.count(CycleSpec::Token::kMessage) == 15);
}

TEST_CASE("run_cycle with zero scale tokens equals the plain block stack") {
  auto rng = make_rng(51, "plainstack");
  Mesh m = strip_mesh(5, rng);
  Graph g = build_graph(m);

  CycleConfig cfg;
  cfg.block = {4, 8, 1, NodeProcessor::kMlp, 1, true, false, false};
  auto spec = CycleSpec::parse("3");
  ParamStore store;
  auto rng2 = make_rng(52, "plainw");
  cycle_init(store, "proc", cfg, spec, rng2);

  Tensor v = random_tensor(g.num_nodes, 4, rng);
  Tensor e = random_tensor(g.num_edges(), 4, rng);

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor out = run_cycle(tape, bind, "proc", cfg, spec, g, m.positions, v, e,
                         plain_edge_features());

  Tape t2;
  TapeBinding b2(t2, store);
  Tensor vv = v, ee = e;
  for (int i = 0; i < 3; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "m%02d", i);
    std::tie(vv, ee) = block_forward(t2, b2, std::string("proc/") + buf, cfg.block, g, vv, ee);
  }
  for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == vv.data()[i]);
}

TEST_CASE("cycle collapse: ratio one with merging off equals the block stack") {
  auto rng = make_rng(53, "collapse");
  Mesh m = strip_mesh(6, rng);
  Graph g = build_graph(m);

  CycleConfig cfg;
  cfg.block = {4, 8, 1, NodeProcessor::kGat, 2, true, false, false};
  cfg.pool_ratio = 1.0;
  cfg.gate = GateMode::kOff;
  cfg.upscale_residual = false;
  auto spec = CycleSpec::parse("2D3U1");  // executes 2 + (pool) + 3 + 1 = 7 blocks

  ParamStore store;
  auto rng2 = make_rng(54, "collapsew");
  cycle_init(store, "proc", cfg, spec, rng2);

  Tensor v = random_tensor(g.num_nodes, 4, rng);
  Tensor e = random_tensor(g.num_edges(), 4, rng);

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor out = run_cycle(tape, bind, "proc", cfg, spec, g, m.positions, v, e,
                         plain_edge_features());

  // plain stack of the same seven blocks in execution order
  CycleConfig plain_cfg = cfg;
  auto plain_spec = CycleSpec::parse("7");
  ParamStore plain;
  auto rng3 = make_rng(55, "plainw2");
  cycle_init(plain, "proc", plain_cfg, plain_spec, rng3);
  copy_params(store, "proc/m00/", plain, "proc/m00/");
  copy_params(store, "proc/m01/", plain, "proc/m01/");
  copy_params(store, "proc/d0/pool/blk/", plain, "proc/m02/");
  copy_params(store, "proc/m02/", plain, "proc/m03/");
  copy_params(store, "proc/m03/", plain, "proc/m04/");
  copy_params(store, "proc/m04/", plain, "proc/m05/");
  copy_params(store, "proc/m05/", plain, "proc/m06/");

  Tape t2;
  TapeBinding b2(t2, plain);
  Tensor out2 = run_cycle(t2, b2, "proc", plain_cfg, plain_spec, g, m.positions, v, e,
                          plain_edge_features());

  for (std::int64_t i = 0; i < out.size(); ++i)
    CHECK(std::abs(out.data()[i] - out2.data()[i]) <= 1e-10);
}

TEST_CASE("downscale keeps ceil(ratio N) on random graphs") {
  auto rng = make_rng(56, "card");
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::int64_t> nd(2, 300);
    std::int64_t n = nd(rng);
    Tensor scores = random_tensor(n, 1, rng);
    auto kept = top_k_indices(scores, 0.5);
    CHECK(static_cast<std::int64_t>(kept.size()) ==
          static_cast<std::int64_t>(std::ceil(0.5 * static_cast<double>(n))));
    CHECK(std::is_sorted(kept.begin(), kept.end()));
  }
}

TEST_CASE("score vector receives gradient through the gated selection") {
  auto rng = make_rng(57, "pgrad");
  Mesh m = strip_mesh(5, rng);
  Graph g = build_graph(m);

  ModelConfig mc_cfg;
  mc_cfg.node_in_dim = 3;
  mc_cfg.edge_in_dim = 3;
  mc_cfg.out_dim = 2;
  mc_cfg.latent = 4;
  mc_cfg.mlp_hidden = 8;
  mc_cfg.mlp_layers = 1;
  mc_cfg.processor = NodeProcessor::kMlp;
  mc_cfg.cycle = "1D1U1";
  Model model(mc_cfg);

  ParamStore store;
  model.init_params(store, 99);

  Tensor node_in = random_tensor(g.num_nodes, 3, rng);
  Tensor edge_in = edge_features(m.positions, g);
  Tensor target = random_tensor(g.num_nodes, 2, rng);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.num_nodes), 1);

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor pred = model.forward(tape, bind, g, m.positions, node_in, edge_in,
                              plain_edge_features());
  Tensor loss = tape.l2_loss(pred, target, mask);
  tape.backward(loss);
  bind.collect_grads();

  double norm = 0.0;
  for (double v : store.entry("proc/d0/pool/p_vec").grad) norm += v * v;
  CHECK(norm > 0.0);
}

TEST_CASE("v-cycle gradient check on a small graph") {
  auto rng = make_rng(58, "cyclegrad");
  Mesh m = strip_mesh(5, rng);
  Graph g = build_graph(m);
  REQUIRE(g.num_nodes == 10);

  ModelConfig cfg;
  cfg.node_in_dim = 3;
  cfg.edge_in_dim = 3;
  cfg.out_dim = 2;
  cfg.latent = 4;
  cfg.mlp_hidden = 6;
  cfg.mlp_layers = 1;
  cfg.processor = NodeProcessor::kGat;
  cfg.heads = 2;
  cfg.cycle = "1D2U1";
  Model model(cfg);

  ParamStore store;
  model.init_params(store, 7);

  Tensor node_in = random_tensor(g.num_nodes, 3, rng);
  Tensor edge_in = edge_features(m.positions, g);
  Tensor target = random_tensor(g.num_nodes, 2, rng);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.num_nodes), 1);

  FrozenSelection frozen;
  auto fn = [&](Tape& tape, TapeBinding& bind) {
    Tensor pred = model.forward(tape, bind, g, m.positions, node_in, edge_in,
                                plain_edge_features(), nullptr, &frozen);
    return tape.l2_loss(pred, target, mask);
  };
  auto rep = ad::grad_check(fn, store, 1e-5, 1e-4, 5);
  INFO("worst " << rep.worst_param << " err " << rep.max_rel_err);
  CHECK(rep.pass);
}

TEST_CASE("depth-2 cycle runs and pops levels correctly") {
  auto rng = make_rng(59, "depth2");
  Mesh m = strip_mesh(10, rng);
  Graph g = build_graph(m);

  ModelConfig cfg;
  cfg.node_in_dim = 3;
  cfg.edge_in_dim = 3;
  cfg.out_dim = 1;
  cfg.latent = 4;
  cfg.mlp_hidden = 6;
  cfg.mlp_layers = 1;
  cfg.processor = NodeProcessor::kMlp;
  cfg.cycle = "1D1D2U1U1";
  Model model(cfg);

  ParamStore store;
  model.init_params(store, 3);

  Tensor node_in = random_tensor(g.num_nodes, 3, rng);
  Tensor edge_in = edge_features(m.positions, g);

  Tape tape;
  TapeBinding bind(tape, store);
  SelectionLog log;
  Tensor out = model.forward(tape, bind, g, m.positions, node_in, edge_in,
                             plain_edge_features(), &log);
  CHECK(out.rows() == g.num_nodes);
  CHECK(out.cols() == 1);

  // selections recorded at both levels: 20 nodes at level 0, 10 at level 1
  std::int64_t lvl0 = 0, lvl1 = 0;
  for (const auto& row : log.rows) {
    if (row.level == 0) ++lvl0;
    if (row.level == 1) ++lvl1;
  }
  CHECK(lvl0 == 20);
  CHECK(lvl1 == 10);
}

TEST_CASE("unbalanced schedules are rejected before running") {
  CHECK_THROWS_AS(CycleSpec::parse("1D1"), ConfigError);
  CHECK_THROWS_AS(CycleSpec::parse("1U1D"), ConfigError);
}

TEST_CASE("full model permutation equivariance on no-tie inputs") {
  auto rng = make_rng(60, "modelperm");
  Mesh m = strip_mesh(4, rng);
  Graph g = build_graph(m);
  const std::int64_t n = g.num_nodes;

  ModelConfig cfg;
  cfg.node_in_dim = 3;
  cfg.edge_in_dim = 3;
  cfg.out_dim = 2;
  cfg.latent = 4;
  cfg.mlp_hidden = 6;
  cfg.mlp_layers = 1;
  cfg.processor = NodeProcessor::kGat;
  cfg.heads = 2;
  cfg.cycle = "1D1U1";
  Model model(cfg);
  ParamStore store;
  model.init_params(store, 21);

  Tensor node_in = random_tensor(n, 3, rng);
  Tensor edge_in = edge_features(m.positions, g);

  Tape tape;
  TapeBinding bind(tape, store);
  Tensor out = model.forward(tape, bind, g, m.positions, node_in, edge_in,
                             plain_edge_features());

  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  Mesh pm = m;
  std::vector<double> pp(static_cast<std::size_t>(n) * 2);
  for (std::int64_t i = 0; i < n; ++i) {
    pp[perm[i] * 2] = m.positions.at(i, 0);
    pp[perm[i] * 2 + 1] = m.positions.at(i, 1);
  }
  pm.positions = Tensor::from({n, 2}, std::move(pp));
  for (auto& c : pm.cells) c = perm[c];
  Graph pg = build_graph(pm);

  Tensor p_node(n, 3);
  for (std::int64_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p_node.at_mut(perm[i], c) = node_in.at(i, c);
  Tensor p_edge = edge_features(pm.positions, pg);

  Tape t2;
  TapeBinding b2(t2, store);
  Tensor pout = model.forward(t2, b2, pg, pm.positions, p_node, p_edge,
                              plain_edge_features());

  for (std::int64_t i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c)
      CHECK(std::abs(pout.at(perm[i], c) - out.at(i, c)) <= 1e-9);
}
