#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meshcycle/common.hpp"
#include "meshcycle/eval.hpp"
#include "meshcycle/vtk.hpp"

using namespace mc;
using ad::Tensor;

namespace {

std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "meshcycle_eval_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}

Trajectory small_traj(int frames, std::uint64_t seed, bool closed = false) {
  SyntheticConfig cfg;
  cfg.nx = 8;
  cfg.ny = 6;
  cfg.frames = frames;
  cfg.seed = seed;
  cfg.closed_domain = closed;
  if (closed) cfg.num_blobs = 2;
  return simulate_oracle(generate_mesh(cfg), cfg);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rollout with the oracle as the model reproduces the trajectory exactly") {
  SyntheticConfig cfg;
  cfg.nx = 9;
  cfg.ny = 7;
  cfg.frames = 25;
  cfg.seed = 101;
  Mesh mesh = generate_mesh(cfg);
  Trajectory traj = simulate_oracle(mesh, cfg);
  TrajCache cache = build_cache(traj);

  auto res = rollout(oracle_stepper(traj.mesh, cache.graph, cfg), traj, cache);
  CHECK(res.rmse_all == 0.0);
  CHECK(res.rmse_1 == 0.0);
  CHECK_FALSE(res.diverged);
  REQUIRE(res.predicted.size() == traj.frames.size());
  for (std::size_t t = 0; t < traj.frames.size(); ++t) {
    auto a = res.predicted[t].data();
    auto b = traj.frames[t].data();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("persistence stub on a constant trajectory is exact") {
  SyntheticConfig cfg;
  cfg.nx = 8;
  cfg.ny = 6;
  cfg.frames = 6;
  cfg.num_blobs = 0;
  cfg.closed_domain = true;
  Trajectory traj = simulate_oracle(generate_mesh(cfg), cfg);
  TrajCache cache = build_cache(traj);

  StepFn persist = [](const Tensor& state, int) { return state.clone(); };
  auto res = rollout(persist, traj, cache);
  CHECK(res.rmse_all == 0.0);
}

TEST_CASE("persistence stub drift matches the hand-computed closed form") {
  Trajectory traj = small_traj(12, 102);
  TrajCache cache = build_cache(traj);

  StepFn persist = [](const Tensor& state, int) { return state.clone(); };
  auto res = rollout(persist, traj, cache);

  // drift oracle: prediction holds frame 0 on dynamic rows, truth on boundary
  double sq = 0.0;
  std::int64_t count = 0;
  for (std::size_t t = 1; t < traj.frames.size(); ++t)
    for (std::int64_t i = 0; i < traj.mesh.num_nodes(); ++i) {
      if (!cache.dynamic[static_cast<std::size_t>(i)]) continue;
      const double d = traj.frames[0].at(i, 0) - traj.frames[t].at(i, 0);
      sq += d * d;
      ++count;
    }
  const double expect = std::sqrt(sq / static_cast<double>(count));
  CHECK(std::abs(res.rmse_all - expect) <= 1e-12 * std::max(1.0, expect));
}

TEST_CASE("rmse: identity, unit offset, and the triple-loop oracle") {
  auto rng = make_rng(80, "rmse");
  std::normal_distribution<double> dist;

  std::vector<Tensor> a, b;
  for (int t = 0; t < 3; ++t) {
    Tensor x(4, 2), y(4, 2);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      x.data_mut()[i] = dist(rng);
      y.data_mut()[i] = dist(rng);
    }
    a.push_back(x);
    b.push_back(y);
  }
  std::vector<std::uint8_t> mask = {1, 1, 0, 1};

  CHECK(rmse(a, a, mask, {}) == 0.0);

  std::vector<Tensor> plus1;
  for (const auto& x : a) {
    Tensor y = x.clone();
    for (auto& v : y.data_mut()) v += 1.0;
    plus1.push_back(y);
  }
  CHECK(rmse(plus1, a, mask, {}) == doctest::Approx(1.0).epsilon(1e-14));

  double sq = 0.0;
  std::int64_t count = 0;
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < 4; ++i) {
      if (!mask[i]) continue;
      for (int c = 0; c < 2; ++c) {
        const double d = a[t].at(i, c) - b[t].at(i, c);
        sq += d * d;
        ++count;
      }
    }
  CHECK(std::abs(rmse(a, b, mask, {}) - std::sqrt(sq / count)) <= 1e-14);

  // channel subsets restrict the error set
  CHECK(rmse(a, b, mask, {0}) != rmse(a, b, mask, {1}));
}

TEST_CASE("rollout flags divergence and truncates") {
  Trajectory traj = small_traj(30, 103);
  TrajCache cache = build_cache(traj);
  StepFn blowup = [](const Tensor& state, int) {
    Tensor next = state.clone();
    for (auto& v : next.data_mut()) v = v * 8.0 + 1.0;
    return next;
  };
  auto res = rollout(blowup, traj, cache);
  CHECK(res.diverged);
  CHECK(res.predicted.size() < traj.frames.size());
}

TEST_CASE("model stepper wiring: trained-free model produces finite rollouts") {
  Trajectory traj = small_traj(6, 104);
  std::vector<Trajectory> data = {traj};
  TrajCache cache = build_cache(traj);

  ModelConfig mcfg;
  mcfg.node_in_dim = static_cast<int>(1 + kNodeTypeCount + traj.globals.size());
  mcfg.edge_in_dim = 3;
  mcfg.out_dim = 1;
  mcfg.latent = 8;
  mcfg.mlp_hidden = 8;
  mcfg.mlp_layers = 1;
  mcfg.processor = NodeProcessor::kMlp;
  mcfg.cycle = "1D1U1";
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, 7);

  Normalizers norms;
  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.total_steps = 2;
  tcfg.seed = 1;
  Trainer warm(model, store, norms, data, tcfg);
  warm.step();  // warms the normalizers

  auto summary = evaluate(model, store, norms, data, 4);
  CHECK(std::isfinite(summary.rmse_1));
  CHECK(std::isfinite(summary.rmse_all));
  CHECK(summary.rmse_all >= 0.0);
}

TEST_CASE("selection export records every level during a rollout") {
  Trajectory traj = small_traj(4, 105);
  std::vector<Trajectory> data = {traj};
  TrajCache cache = build_cache(traj);

  ModelConfig mcfg;
  mcfg.node_in_dim = static_cast<int>(1 + kNodeTypeCount + traj.globals.size());
  mcfg.edge_in_dim = 3;
  mcfg.out_dim = 1;
  mcfg.latent = 8;
  mcfg.mlp_hidden = 8;
  mcfg.mlp_layers = 1;
  mcfg.processor = NodeProcessor::kMlp;
  mcfg.cycle = "1D1U1";
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, 8);

  Normalizers norms;
  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.total_steps = 1;
  tcfg.seed = 2;
  Trainer warm(model, store, norms, data, tcfg);
  warm.step();

  std::vector<SelectionLog> logs(2);
  for (int t = 0; t < 2; ++t) {
    SelectionLog log;
    auto stepper = model_stepper(model, store, norms, cache, &log);
    Tensor next = stepper(traj.frames[static_cast<std::size_t>(t)], t);
    logs[static_cast<std::size_t>(t)] = log;
    CHECK(static_cast<std::int64_t>(log.rows.size()) == traj.mesh.num_nodes());
  }

  const std::string path = temp_dir() + "/selection.csv";
  write_selection_csv(path, logs);
  std::string contents = slurp(path);
  CHECK(contents.rfind("step,level,node,kept,score\n", 0) == 0);
  // header + one row per node per step
  const auto lines = std::count(contents.begin(), contents.end(), '\n');
  CHECK(lines == 1 + 2 * traj.mesh.num_nodes());
}

TEST_CASE("ablation: single-run grid, labels, and determinism") {
  SyntheticConfig cfg;
  cfg.nx = 7;
  cfg.ny = 5;
  cfg.frames = 5;
  cfg.seed = 106;
  std::vector<Trajectory> train = {simulate_oracle(generate_mesh(cfg), cfg)};
  cfg.seed = 107;
  std::vector<Trajectory> test = {simulate_oracle(generate_mesh(cfg), cfg)};

  ModelConfig base;
  base.node_in_dim = static_cast<int>(1 + kNodeTypeCount + train[0].globals.size());
  base.edge_in_dim = 3;
  base.out_dim = 1;
  base.latent = 6;
  base.mlp_hidden = 6;
  base.mlp_layers = 1;
  base.heads = 2;

  auto suite = table2_suite(base);
  REQUIRE(suite.size() == 8);
  CHECK(suite[0].method == "mgn");
  CHECK(suite[2].method == "mgn_masking");
  CHECK(suite[2].masked_pretrain);
  CHECK(suite[7].method == "wcycle_masking_attention");
  CHECK(suite[7].model_cfg.processor == NodeProcessor::kGat);

  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.seed = 9;
  tcfg.normalizer_warmup = 2;

  const std::string dir = temp_dir() + "/ablate";
  std::filesystem::remove_all(dir);

  std::vector<AblationRun> single = {suite[0]};
  auto res1 = run_ablation(single, train, test, tcfg, 4, dir + "/r1");
  REQUIRE(res1.size() == 1);
  CHECK(res1[0].status == "ok");
  CHECK(res1[0].method == "mgn");

  auto res2 = run_ablation(single, train, test, tcfg, 4, dir + "/r2");
  write_results_csv(dir + "/a.csv", res1);
  write_results_csv(dir + "/b.csv", res2);
  CHECK(slurp(dir + "/a.csv") == slurp(dir + "/b.csv"));
  CHECK(slurp(dir + "/a.csv").find("method,seed,steps,") == 0);
}

TEST_CASE("ablation grid records individual failures and continues") {
  SyntheticConfig cfg;
  cfg.nx = 7;
  cfg.ny = 5;
  cfg.frames = 4;
  cfg.seed = 108;
  std::vector<Trajectory> train = {simulate_oracle(generate_mesh(cfg), cfg)};

  ModelConfig bad;
  bad.node_in_dim = 3;  // wrong width: the run must fail, not the grid
  bad.edge_in_dim = 3;
  bad.out_dim = 1;
  bad.latent = 6;
  bad.mlp_hidden = 6;
  ModelConfig good = bad;
  good.node_in_dim = static_cast<int>(1 + kNodeTypeCount + train[0].globals.size());

  std::vector<AblationRun> runs = {{"broken", bad, false}, {"works", good, false}};
  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.seed = 3;
  tcfg.normalizer_warmup = 1;
  auto res = run_ablation(runs, train, train, tcfg, 2, temp_dir() + "/ablate_fail");
  REQUIRE(res.size() == 2);
  CHECK(res[0].status.rfind("failed:", 0) == 0);
  CHECK(res[1].status == "ok");
}

TEST_CASE("vtk and csv frame exports are parseable") {
  Trajectory traj = small_traj(3, 109);
  const std::string vtk_path = temp_dir() + "/frame.vtk";
  write_vtk_frame(vtk_path, traj.mesh, traj.frames[0], traj.field_names);
  std::string vtk = slurp(vtk_path);
  CHECK(vtk.find("# vtk DataFile Version 3.0") == 0);
  CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(vtk.find("POINTS 48 double") != std::string::npos);
  CHECK(vtk.find("SCALARS theta double 1") != std::string::npos);

  const std::string csv_path = temp_dir() + "/frame.csv";
  write_csv_frame(csv_path, traj.mesh, traj.frames[0], traj.field_names);
  std::string csv = slurp(csv_path);
  CHECK(csv.rfind("node,x,y,type,theta\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + traj.mesh.num_nodes());
}
