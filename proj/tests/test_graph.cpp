#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "meshcycle/common.hpp"
#include "meshcycle/graph.hpp"
#include "meshcycle/mesh.hpp"
#include "meshcycle/spatial.hpp"

using namespace mc;
using ad::Tensor;

namespace {

Mesh make_mesh(std::vector<double> positions, int dim, std::vector<std::int64_t> cells) {
  Mesh m;
  const auto n = static_cast<std::int64_t>(positions.size()) / dim;
  m.positions = Tensor::from({n, dim}, std::move(positions));
  m.cells = std::move(cells);
  m.simplex_size = dim + 1;
  m.node_type.assign(static_cast<std::size_t>(n), 0);
  return m;
}

Mesh random_mesh(std::int64_t n_nodes, std::int64_t n_cells, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n_nodes) * 2);
  for (auto& v : p) v = pos(rng);
  std::vector<std::int64_t> cells;
  std::uniform_int_distribution<std::int64_t> node(0, n_nodes - 1);
  while (static_cast<std::int64_t>(cells.size()) < n_cells * 3) {
    std::int64_t a = node(rng), b = node(rng), c = node(rng);
    if (a == b || b == c || a == c) continue;
    cells.insert(cells.end(), {a, b, c});
  }
  return make_mesh(std::move(p), 2, std::move(cells));
}

std::set<std::pair<std::int64_t, std::int64_t>> edge_set(const Graph& g) {
  std::set<std::pair<std::int64_t, std::int64_t>> s;
  for (std::int64_t k = 0; k < g.num_edges(); ++k) s.insert({g.receivers[k], g.senders[k]});
  return s;
}

}  // namespace

TEST_CASE("build_graph: single triangle gives six directed edges") {
  Mesh m = make_mesh({0, 0, 1, 0, 0, 1}, 2, {0, 1, 2});
  Graph g = build_graph(m);
  CHECK(g.num_edges() == 6);
  g.validate();
}

TEST_CASE("build_graph: two triangles sharing an edge give ten directed edges") {
  Mesh m = make_mesh({0, 0, 1, 0, 0.5, 1, 1.5, 1}, 2, {0, 1, 2, 1, 2, 3});
  Graph g = build_graph(m);
  CHECK(g.num_edges() == 10);

  // brute-force pair enumeration over cells with dedup
  std::set<std::pair<std::int64_t, std::int64_t>> expect;
  for (std::int64_t c = 0; c < m.num_cells(); ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        expect.insert({m.cells[c * 3 + i], m.cells[c * 3 + j]});
      }
  CHECK(edge_set(g) == expect);
}

TEST_CASE("build_graph: zero cells means zero edges") {
  Mesh m = make_mesh({0, 0, 1, 1}, 2, {});
  CHECK(build_graph(m).num_edges() == 0);
}

TEST_CASE("build_graph: invalid cells are structural errors") {
  Mesh bad = make_mesh({0, 0, 1, 0, 0, 1}, 2, {0, 1, 7});
  CHECK_THROWS_AS(build_graph(bad), StructuralError);
  Mesh degen = make_mesh({0, 0, 1, 0, 0, 1}, 2, {0, 1, 1});
  CHECK_THROWS_AS(build_graph(degen), StructuralError);
}

TEST_CASE("build_graph: canonical edge order and permutation consistency") {
  auto rng = make_rng(10, "perm");
  Mesh m = random_mesh(12, 8, rng);
  Graph g = build_graph(m);
  g.validate();
  for (std::int64_t k = 1; k < g.num_edges(); ++k) {
    CHECK(std::make_pair(g.receivers[k - 1], g.senders[k - 1]) <
          std::make_pair(g.receivers[k], g.senders[k]));
  }

  // relabel mesh nodes by a random permutation
  std::vector<std::int64_t> perm(12);
  for (std::int64_t i = 0; i < 12; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);

  Mesh pm = m;
  std::vector<double> pp(m.positions.size());
  for (std::int64_t i = 0; i < 12; ++i) {
    pp[perm[i] * 2] = m.positions.at(i, 0);
    pp[perm[i] * 2 + 1] = m.positions.at(i, 1);
  }
  pm.positions = Tensor::from({12, 2}, std::move(pp));
  for (auto& c : pm.cells) c = perm[c];

  Graph pg = build_graph(pm);
  std::set<std::pair<std::int64_t, std::int64_t>> mapped;
  for (std::int64_t k = 0; k < g.num_edges(); ++k)
    mapped.insert({perm[g.receivers[k]], perm[g.senders[k]]});
  CHECK(edge_set(pg) == mapped);
}

TEST_CASE("edge_features: unit displacement example") {
  Mesh m = make_mesh({0, 0, 1, 0, 0, 1}, 2, {0, 1, 2});
  Graph g = build_graph(m);
  Tensor f = edge_features(m.positions, g);
  // find edge sender 0 -> receiver 1
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    if (g.senders[k] == 0 && g.receivers[k] == 1) {
      CHECK(f.at(k, 0) == -1.0);
      CHECK(f.at(k, 1) == 0.0);
      CHECK(f.at(k, 2) == 1.0);
    }
  }
}

TEST_CASE("edge_features: coincident nodes give zero displacement and norm") {
  Mesh m = make_mesh({0.5, 0.5, 0.5, 0.5, 1, 1}, 2, {0, 1, 2});
  Graph g = build_graph(m);
  Tensor f = edge_features(m.positions, g);
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    if ((g.senders[k] == 0 && g.receivers[k] == 1) ||
        (g.senders[k] == 1 && g.receivers[k] == 0)) {
      CHECK(f.at(k, 0) == 0.0);
      CHECK(f.at(k, 1) == 0.0);
      CHECK(f.at(k, 2) == 0.0);
    }
  }
}

TEST_CASE("edge_features: random mesh matches the per-edge loop oracle") {
  auto rng = make_rng(11, "edgefeat");
  Mesh m = random_mesh(5, 4, rng);
  Graph g = build_graph(m);
  Tensor f = edge_features(m.positions, g);
  CHECK(f.cols() == 3);
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    double dx = m.positions.at(g.senders[k], 0) - m.positions.at(g.receivers[k], 0);
    double dy = m.positions.at(g.senders[k], 1) - m.positions.at(g.receivers[k], 1);
    CHECK(std::abs(f.at(k, 0) - dx) <= 1e-15);
    CHECK(std::abs(f.at(k, 1) - dy) <= 1e-15);
    CHECK(std::abs(f.at(k, 2) - std::sqrt(dx * dx + dy * dy)) <= 1e-15);
  }
}

TEST_CASE("edge_features: antisymmetry between edge directions") {
  auto rng = make_rng(12, "antisym");
  Mesh m = random_mesh(9, 7, rng);
  Graph g = build_graph(m);
  Tensor f = edge_features(m.positions, g);
  for (std::int64_t k = 0; k < g.num_edges(); ++k)
    for (std::int64_t k2 = 0; k2 < g.num_edges(); ++k2) {
      if (g.senders[k] == g.receivers[k2] && g.receivers[k] == g.senders[k2]) {
        CHECK(f.at(k, 0) == -f.at(k2, 0));
        CHECK(f.at(k, 1) == -f.at(k2, 1));
        CHECK(f.at(k, 2) == f.at(k2, 2));
      }
    }
}

TEST_CASE("add_world_edges: single qualifying pair") {
  Graph g;
  g.num_nodes = 2;  // disconnected nodes
  Tensor pos = Tensor::from({2, 2}, {0.0, 0.0, 0.5, 0.0});
  Graph aug = add_world_edges(g, pos, 1.0);
  CHECK(aug.num_edges() == 2);
  CHECK(aug.world_flag[0] == 1);
  CHECK(aug.world_flag[1] == 1);
  aug.validate();
}

TEST_CASE("add_world_edges: adjacent pairs inside the radius are not duplicated") {
  Mesh m = make_mesh({0, 0, 0.3, 0, 0, 0.3}, 2, {0, 1, 2});
  Graph g = build_graph(m);
  Graph aug = add_world_edges(g, m.positions, 1.0);
  CHECK(aug.num_edges() == g.num_edges());
  for (auto fl : aug.world_flag) CHECK(fl == 0);
}

TEST_CASE("add_world_edges: matches the all-pairs oracle on a random cloud") {
  auto rng = make_rng(13, "world");
  const std::int64_t n = 50;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> pos(n * 2);
  for (auto& v : pos) v = dist(rng);
  Tensor p = Tensor::from({n, 2}, std::move(pos));

  Mesh m;
  m.positions = p;
  m.simplex_size = 3;
  m.node_type.assign(n, 0);
  // sprinkle a few cells so some pairs are mesh-adjacent
  m.cells = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  Graph g = build_graph(m);

  const double radius = 0.25;
  Graph aug = add_world_edges(g, p, radius);
  aug.validate();

  auto mesh_edges = edge_set(g);
  std::set<std::pair<std::int64_t, std::int64_t>> expect_world;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mesh_edges.count({i, j})) continue;
      double dx = p.at(i, 0) - p.at(j, 0), dy = p.at(i, 1) - p.at(j, 1);
      if (dx * dx + dy * dy < radius * radius) expect_world.insert({i, j});
    }

  std::set<std::pair<std::int64_t, std::int64_t>> got_world;
  for (std::int64_t k = 0; k < aug.num_edges(); ++k)
    if (aug.world_flag[k]) got_world.insert({aug.receivers[k], aug.senders[k]});
  CHECK(got_world == expect_world);
  CHECK(edge_set(aug).size() == mesh_edges.size() + expect_world.size());
}

TEST_CASE("induced_subgraph: keep-all is the identity") {
  auto rng = make_rng(14, "keepall");
  Mesh m = random_mesh(10, 6, rng);
  Graph g = build_graph(m);
  std::vector<std::int64_t> keep(10);
  for (std::int64_t i = 0; i < 10; ++i) keep[i] = i;
  auto sub = induced_subgraph(g, keep);
  CHECK(sub.graph.senders == g.senders);
  CHECK(sub.graph.receivers == g.receivers);
}

TEST_CASE("induced_subgraph: severed path keeps isolated nodes") {
  Mesh m = make_mesh({0, 0, 1, 0, 2, 0, 1, 1}, 2, {0, 1, 3, 1, 2, 3});
  Graph path;
  path.num_nodes = 3;
  path.receivers = {0, 1, 1, 2};
  path.senders = {1, 0, 2, 1};
  auto sub = induced_subgraph(path, {0, 2});
  CHECK(sub.graph.num_nodes == 2);
  CHECK(sub.graph.num_edges() == 0);
  CHECK(sub.old_to_new == std::vector<std::int64_t>{0, -1, 1});
}

TEST_CASE("induced_subgraph: random keep matches the membership-filter oracle") {
  auto rng = make_rng(15, "subgraph");
  Mesh m = random_mesh(30, 25, rng);
  Graph g = build_graph(m);
  std::vector<std::int64_t> keep;
  std::bernoulli_distribution b(0.5);
  for (std::int64_t i = 0; i < 30; ++i)
    if (b(rng)) keep.push_back(i);
  if (keep.empty()) keep.push_back(0);

  auto sub = induced_subgraph(g, keep);
  sub.graph.validate();

  std::set<std::pair<std::int64_t, std::int64_t>> expect;
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    auto nr = sub.old_to_new[g.receivers[k]];
    auto ns = sub.old_to_new[g.senders[k]];
    if (nr >= 0 && ns >= 0) expect.insert({nr, ns});
  }
  CHECK(edge_set(sub.graph) == expect);

  CHECK_THROWS_AS(induced_subgraph(g, {}), StructuralError);
}

TEST_CASE("spatial index knn matches brute force including grid path") {
  auto rng = make_rng(16, "knn");
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (std::int64_t n : {5, 40, 200, 500}) {  // spans brute-force and grid regimes
    std::vector<double> pts(n * 2);
    for (auto& v : pts) v = dist(rng);
    Tensor p = Tensor::from({n, 2}, std::move(pts));
    SpatialIndex index(p);
    for (int q = 0; q < 25; ++q) {
      double query[2] = {dist(rng), dist(rng)};
      std::vector<std::int64_t> idx;
      std::vector<double> d2;
      index.knn(query, 3, idx, d2);

      std::vector<std::pair<double, std::int64_t>> all;
      for (std::int64_t i = 0; i < n; ++i) {
        double dx = p.at(i, 0) - query[0], dy = p.at(i, 1) - query[1];
        all.push_back({dx * dx + dy * dy, i});
      }
      std::sort(all.begin(), all.end());
      const auto expect_k = std::min<std::size_t>(3, all.size());
      REQUIRE(idx.size() == expect_k);
      for (std::size_t i = 0; i < expect_k; ++i) {
        CHECK(idx[i] == all[i].second);
        CHECK(d2[i] == all[i].first);
      }
    }
  }
}

TEST_CASE("spatial index radius query matches brute force") {
  auto rng = make_rng(17, "radius");
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const std::int64_t n = 300;
  std::vector<double> pts(n * 2);
  for (auto& v : pts) v = dist(rng);
  Tensor p = Tensor::from({n, 2}, std::move(pts));
  SpatialIndex index(p);
  for (int q = 0; q < 20; ++q) {
    double query[2] = {dist(rng), dist(rng)};
    double r = 0.05 + 0.2 * dist(rng);
    auto got = index.radius_query(query, r);
    std::vector<std::int64_t> expect;
    for (std::int64_t i = 0; i < n; ++i) {
      double dx = p.at(i, 0) - query[0], dy = p.at(i, 1) - query[1];
      if (dx * dx + dy * dy < r * r) expect.push_back(i);
    }
    CHECK(got == expect);
  }
}
