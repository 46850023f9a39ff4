// Command-line entry point wiring data generation, training, evaluation,
// rollout, the ablation grid, gradient checks, and field export.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error,
// 3 numerical failure (non-finite values or divergence).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "meshcycle/common.hpp"
#include "meshcycle/config.hpp"
#include "meshcycle/eval.hpp"
#include "meshcycle/trainer.hpp"
#include "meshcycle/trajfile.hpp"
#include "meshcycle/vtk.hpp"

namespace fs = std::filesystem;
using namespace mc;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  std::string data_path;
  std::string ckpt_path;
  std::int64_t steps = -1;
  std::string model_kind;  // mgn | vcycle | wcycle
  int depth = -1;
  std::string attention;  // mlp | gat
  double mask_ratio = -1.0;
  double noise = -1.0;
};

IniConfig load_config(const CommonFlags& flags) {
  IniConfig cfg;
  if (!flags.config_path.empty()) cfg = IniConfig::load(flags.config_path);
  // flags override their config-file equivalents
  if (flags.seed >= 0) cfg.set_int("run", "seed", flags.seed);
  if (!flags.out_dir.empty()) cfg.set("run", "out", flags.out_dir);
  if (!flags.data_path.empty()) cfg.set("data", "manifest", flags.data_path);
  if (!flags.ckpt_path.empty()) cfg.set("run", "ckpt", flags.ckpt_path);
  if (flags.steps >= 0) cfg.set_int("train", "steps", flags.steps);
  if (!flags.model_kind.empty()) cfg.set("model", "kind", flags.model_kind);
  if (flags.depth >= 0) cfg.set_int("model", "depth", flags.depth);
  if (!flags.attention.empty()) cfg.set("model", "attention", flags.attention);
  if (flags.mask_ratio >= 0.0) cfg.set_double("train", "mask_keep", flags.mask_ratio);
  if (flags.noise >= 0.0) cfg.set_double("train", "noise", flags.noise);
  return cfg;
}

std::uint64_t required_seed(const IniConfig& cfg) {
  if (!cfg.has("run", "seed"))
    throw ConfigError("a seed is required (--seed or [run] seed); runs never seed from the clock");
  return static_cast<std::uint64_t>(cfg.get_int("run", "seed", 0));
}

std::string default_cycle(const std::string& kind, int depth) {
  if (kind == "mgn" || kind.empty()) return "15";
  if (kind == "vcycle") return depth >= 2 ? "3D3D4U2U3" : "4D10U1";
  if (kind == "wcycle") return depth >= 2 ? "2D2D2U1D2U2U4" : "3D4U3D4U1";
  throw ConfigError("unknown model kind: " + kind + " (expected mgn, vcycle, or wcycle)");
}

ModelConfig model_from_config(const IniConfig& cfg, int node_in, int edge_in, int out_dim) {
  ModelConfig m;
  m.node_in_dim = node_in;
  m.edge_in_dim = edge_in;
  m.out_dim = out_dim;
  m.latent = static_cast<int>(cfg.get_int("model", "latent", 128));
  m.mlp_hidden = static_cast<int>(cfg.get_int("model", "hidden", 128));
  m.mlp_layers = static_cast<int>(cfg.get_int("model", "layers", 2));
  const std::string attention = cfg.get("model", "attention", "gat");
  if (attention == "gat") {
    m.processor = NodeProcessor::kGat;
  } else if (attention == "mlp") {
    m.processor = NodeProcessor::kMlp;
  } else {
    throw ConfigError("unknown attention mode: " + attention);
  }
  m.heads = static_cast<int>(cfg.get_int("model", "heads", 4));
  m.cycle = cfg.get("model", "cycle",
                    default_cycle(cfg.get("model", "kind", "mgn"),
                                  static_cast<int>(cfg.get_int("model", "depth", 1))));
  m.pool_ratio = cfg.get_double("model", "ratio", 0.5);
  m.knn_neighbors = static_cast<int>(cfg.get_int("model", "knn", 3));
  const std::string gate = cfg.get("model", "gate", "scaled");
  m.gate = gate == "off"   ? GateMode::kOff
           : gate == "raw" ? GateMode::kRaw
                           : GateMode::kScaled;
  m.residuals = cfg.get_bool("model", "residuals", true);
  m.upscale_residual = cfg.get_bool("model", "upscale_residual", true);
  m.gat_sigma_softmax = cfg.get_bool("model", "sigma_softmax", false);
  m.gat_deep_logits = cfg.get_bool("model", "deep_logits", false);
  return m;
}

TrainConfig train_from_config(const IniConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = static_cast<int>(cfg.get_int("train", "batch", 2));
  t.total_steps = cfg.get_int("train", "steps", 20000);
  t.lr_start = cfg.get_double("train", "lr_start", 1e-4);
  t.lr_end = cfg.get_double("train", "lr_end", 1e-6);
  t.decay_window = cfg.get_int("train", "decay_window", -1);
  t.noise_sigma = cfg.get_double("train", "noise", 0.02);
  t.mask_keep_ratio = cfg.get_double("train", "mask_keep", 0.85);
  t.normalizer_warmup = cfg.get_int("train", "normalizer_warmup", 10000);
  t.self_conditioning_p = cfg.get_double("train", "self_conditioning_p", 0.0);
  t.seed = seed;
  return t;
}

SyntheticConfig synth_from_config(const IniConfig& cfg, std::uint64_t seed) {
  SyntheticConfig s;
  s.nx = static_cast<int>(cfg.get_int("synth", "nx", 36));
  s.ny = static_cast<int>(cfg.get_int("synth", "ny", 28));
  s.width = cfg.get_double("synth", "width", 1.6);
  s.height = cfg.get_double("synth", "height", 1.2);
  s.jitter = cfg.get_double("synth", "jitter", 0.25);
  s.obstacle_radius = cfg.get_double("synth", "obstacle_radius", 0.0);
  s.obstacle_cx = cfg.get_double("synth", "obstacle_cx", 0.45);
  s.obstacle_cy = cfg.get_double("synth", "obstacle_cy", 0.6);
  const std::string physics = cfg.get("synth", "physics", "diffusion");
  if (physics == "diffusion") {
    s.physics = SyntheticConfig::Physics::kDiffusion;
  } else if (physics == "advection_diffusion") {
    s.physics = SyntheticConfig::Physics::kAdvectionDiffusion;
  } else {
    throw ConfigError("unknown physics: " + physics);
  }
  const std::string weighting = cfg.get("synth", "weighting", "uniform");
  s.weighting = weighting == "cotangent" ? SyntheticConfig::Weighting::kCotangent
                                         : SyntheticConfig::Weighting::kUniform;
  s.kappa = cfg.get_double("synth", "kappa", 1.0);
  s.adv_x = cfg.get_double("synth", "adv_x", 0.0);
  s.adv_y = cfg.get_double("synth", "adv_y", 0.0);
  s.dt = cfg.get_double("synth", "dt", 2e-4);
  s.frames = static_cast<int>(cfg.get_int("synth", "frames", 100));
  s.num_blobs = static_cast<int>(cfg.get_int("synth", "blobs", 3));
  s.inflow_value = cfg.get_double("synth", "inflow_value", 1.0);
  s.closed_domain = cfg.get_bool("synth", "closed", false);
  s.seed = seed;
  return s;
}

void write_resolved(const IniConfig& base, const ModelConfig* model, const TrainConfig* train,
                    const SyntheticConfig* synth, std::uint64_t seed,
                    const std::string& out_dir) {
  IniConfig resolved = base;
  resolved.set_int("run", "seed", static_cast<std::int64_t>(seed));
  resolved.set("run", "out", out_dir);
  if (model) {
    resolved.set("model", "cycle", model->cycle);
    resolved.set_int("model", "latent", model->latent);
    resolved.set_int("model", "hidden", model->mlp_hidden);
    resolved.set_int("model", "layers", model->mlp_layers);
    resolved.set("model", "attention",
                 model->processor == NodeProcessor::kGat ? "gat" : "mlp");
    resolved.set_int("model", "heads", model->heads);
    resolved.set_double("model", "ratio", model->pool_ratio);
    resolved.set_int("model", "knn", model->knn_neighbors);
    resolved.set("model", "gate", model->gate == GateMode::kOff   ? "off"
                                  : model->gate == GateMode::kRaw ? "raw"
                                                                  : "scaled");
    resolved.set("model", "residuals", model->residuals ? "on" : "off");
    resolved.set("model", "upscale_residual", model->upscale_residual ? "on" : "off");
  }
  if (train) {
    resolved.set_int("train", "batch", train->batch_size);
    resolved.set_int("train", "steps", train->total_steps);
    resolved.set_double("train", "lr_start", train->lr_start);
    resolved.set_double("train", "lr_end", train->lr_end);
    resolved.set_double("train", "noise", train->noise_sigma);
    resolved.set_double("train", "mask_keep", train->mask_keep_ratio);
    resolved.set_int("train", "normalizer_warmup", train->normalizer_warmup);
  }
  if (synth) {
    resolved.set_int("synth", "nx", synth->nx);
    resolved.set_int("synth", "ny", synth->ny);
    resolved.set_double("synth", "dt", synth->dt);
    resolved.set_double("synth", "kappa", synth->kappa);
    resolved.set_int("synth", "frames", synth->frames);
    resolved.set_double("synth", "jitter", synth->jitter);
  }
  resolved.save(out_dir + "/resolved.cfg");
}

struct LoadedData {
  std::vector<Trajectory> train, test;
};

LoadedData load_split(const IniConfig& cfg) {
  const std::string manifest_path = cfg.get("data", "manifest", "");
  if (manifest_path.empty()) throw ConfigError("a dataset manifest is required (--data)");
  Manifest manifest = load_manifest(manifest_path);
  LoadedData data;
  for (const auto& name : manifest.train)
    data.train.push_back(load_trajectory(manifest.dir.empty() ? name : manifest.dir + "/" + name));
  for (const auto& name : manifest.test)
    data.test.push_back(load_trajectory(manifest.dir.empty() ? name : manifest.dir + "/" + name));
  if (data.train.empty()) throw ConfigError("manifest lists no training trajectories");
  return data;
}

ModelConfig model_for_data(const IniConfig& cfg, const Trajectory& sample) {
  const int node_in =
      static_cast<int>(sample.num_fields() + kNodeTypeCount + sample.globals.size());
  const int edge_in = sample.mesh.dim() + 1;
  return model_from_config(cfg, node_in, edge_in, static_cast<int>(sample.num_fields()));
}

int cmd_gen_data(const CommonFlags& flags) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);

  const auto n_train = cfg.get_int("synth", "trajectories", 50);
  const auto n_test = cfg.get_int("synth", "test_trajectories", 10);

  Manifest manifest;
  SyntheticConfig proto = synth_from_config(cfg, seed);
  for (std::int64_t i = 0; i < n_train + n_test; ++i) {
    SyntheticConfig scfg = proto;
    scfg.seed = seed + static_cast<std::uint64_t>(i < n_train ? i : 100000 + (i - n_train));
    Mesh mesh = generate_mesh(scfg);
    Trajectory traj = simulate_oracle(mesh, scfg);
    char name[64];
    if (i < n_train) {
      std::snprintf(name, sizeof name, "train_%04lld.mctrj", static_cast<long long>(i));
      manifest.train.push_back(name);
    } else {
      std::snprintf(name, sizeof name, "test_%04lld.mctrj",
                    static_cast<long long>(i - n_train));
      manifest.test.push_back(name);
    }
    save_trajectory(out + "/" + name, traj);
  }
  save_manifest(out + "/manifest.json", manifest);
  write_resolved(cfg, nullptr, nullptr, &proto, seed, out);
  log_info("wrote " + std::to_string(n_train) + " train + " + std::to_string(n_test) +
           " test trajectories to " + out);
  return 0;
}

int cmd_train(const CommonFlags& flags, bool two_phase) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);

  LoadedData data = load_split(cfg);
  ModelConfig mcfg = model_for_data(cfg, data.train.front());
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, seed);
  Normalizers norms;
  TrainConfig tcfg = train_from_config(cfg, seed);

  if (!cfg.get("run", "ckpt", "").empty()) {
    Adam tmp;
    std::int64_t step = 0;
    std::string phase;
    load_training_state(cfg.get("run", "ckpt", ""), store, tmp, norms, step, phase,
                        model_config_guard(mcfg));
    log_info("initialized from checkpoint at step " + std::to_string(step));
  }

  write_resolved(cfg, &mcfg, &tcfg, nullptr, seed, out);
  MetricsLog log(out + "/metrics.csv");

  if (two_phase) {
    const std::int64_t pre = cfg.get_int("train", "pretrain_steps", tcfg.total_steps / 2);
    const std::int64_t fine =
        cfg.get_int("train", "finetune_steps", tcfg.total_steps - tcfg.total_steps / 2);
    auto res = run_two_phase(model, store, norms, data.train, tcfg, pre, fine, out, &log);
    log_info("pretrain checkpoint: " + res.pretrain_checkpoint);
    log_info("final checkpoint: " + res.final_checkpoint);
  } else {
    tcfg.phase = TrainConfig::Phase::kPlain;
    Trainer trainer(model, store, norms, data.train, tcfg);
    trainer.run(tcfg.total_steps, &log, "plain", out + "/diagnostic.mcckpt");
    save_training_state(out + "/final.mcckpt", store, trainer.optimizer(), norms,
                        tcfg.total_steps, "plain", model_config_guard(mcfg));
    log_info("final checkpoint: " + out + "/final.mcckpt");
  }
  return 0;
}

int cmd_eval(const CommonFlags& flags) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);
  const std::string ckpt = cfg.get("run", "ckpt", "");
  if (ckpt.empty()) throw ConfigError("eval requires a checkpoint (--ckpt)");

  LoadedData data = load_split(cfg);
  const auto& sample = data.test.empty() ? data.train.front() : data.test.front();
  ModelConfig mcfg = model_for_data(cfg, sample);
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, seed);
  Normalizers norms;
  Adam adam;
  std::int64_t step = 0;
  std::string phase;
  load_training_state(ckpt, store, adam, norms, step, phase, model_config_guard(mcfg));

  const auto& split = data.test.empty() ? data.train : data.test;
  const int rollout_steps = static_cast<int>(cfg.get_int("eval", "rollout_steps", -1));

  std::FILE* f = std::fopen((out + "/eval.csv").c_str(), "w");
  if (!f) throw StructuralError("cannot open " + out + "/eval.csv");
  std::fprintf(f, "trajectory,rmse_1,rmse_all,rmse_all_mean_steps,diverged\n");
  std::vector<RolloutResult> results(split.size());
  parallel_for(static_cast<std::int64_t>(split.size()), [&](std::int64_t i) {
    TrajCache cache = build_cache(split[static_cast<std::size_t>(i)]);
    results[static_cast<std::size_t>(i)] =
        rollout(model_stepper(model, store, norms, cache), split[static_cast<std::size_t>(i)],
                cache, rollout_steps);
  });
  double sq1 = 0.0, sq_all = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%d\n", i, r.rmse_1, r.rmse_all,
                 r.rmse_all_mean_steps, r.diverged ? 1 : 0);
    sq1 += r.rmse_1 * r.rmse_1;
    sq_all += r.rmse_all * r.rmse_all;
  }
  std::fprintf(f, "aggregate,%.17g,%.17g,,\n", std::sqrt(sq1 / results.size()),
               std::sqrt(sq_all / results.size()));
  std::fclose(f);
  write_resolved(cfg, &mcfg, nullptr, nullptr, seed, out);
  log_info("wrote " + out + "/eval.csv");
  return 0;
}

int cmd_rollout(const CommonFlags& flags, int traj_index, const std::string& export_format,
                int every, bool selection) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);
  const std::string ckpt = cfg.get("run", "ckpt", "");
  if (ckpt.empty()) throw ConfigError("rollout requires a checkpoint (--ckpt)");

  LoadedData data = load_split(cfg);
  const auto& split = data.test.empty() ? data.train : data.test;
  if (traj_index < 0 || traj_index >= static_cast<int>(split.size()))
    throw ConfigError("trajectory index out of range");
  const Trajectory& traj = split[static_cast<std::size_t>(traj_index)];

  ModelConfig mcfg = model_for_data(cfg, traj);
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, seed);
  Normalizers norms;
  Adam adam;
  std::int64_t step = 0;
  std::string phase;
  load_training_state(ckpt, store, adam, norms, step, phase, model_config_guard(mcfg));

  TrajCache cache = build_cache(traj);
  const int steps = static_cast<int>(cfg.get_int("eval", "rollout_steps", -1));

  std::vector<SelectionLog> logs;
  RolloutResult res;
  if (selection) {
    // per-step logs need stepping under our control
    Tensor state = traj.frames[0].clone();
    const int n_steps = steps < 0 ? static_cast<int>(traj.num_frames()) - 1 : steps;
    logs.resize(static_cast<std::size_t>(n_steps));
    StepFn stepper = [&](const Tensor& s, int t) {
      auto fn = model_stepper(model, store, norms, cache, &logs[static_cast<std::size_t>(t)]);
      return fn(s, t);
    };
    res = rollout(stepper, traj, cache, n_steps);
    write_selection_csv(out + "/selection.csv", logs);
  } else {
    res = rollout(model_stepper(model, store, norms, cache), traj, cache, steps);
  }

  std::FILE* f = std::fopen((out + "/rollout.csv").c_str(), "w");
  if (!f) throw StructuralError("cannot open " + out + "/rollout.csv");
  std::fprintf(f, "step,rmse\n");
  for (std::size_t t = 0; t < res.step_rmse.size(); ++t)
    std::fprintf(f, "%zu,%.17g\n", t + 1, res.step_rmse[t]);
  std::fprintf(f, "all,%.17g\n", res.rmse_all);
  std::fclose(f);

  if (export_format != "none") {
    for (std::size_t t = 0; t < res.predicted.size(); t += static_cast<std::size_t>(every)) {
      char name[64];
      if (export_format == "vtk") {
        std::snprintf(name, sizeof name, "frame_%04zu.vtk", t);
        write_vtk_frame(out + "/" + name, traj.mesh, res.predicted[t], traj.field_names);
      } else {
        std::snprintf(name, sizeof name, "frame_%04zu.csv", t);
        write_csv_frame(out + "/" + name, traj.mesh, res.predicted[t], traj.field_names);
      }
    }
  }
  write_resolved(cfg, &mcfg, nullptr, nullptr, seed, out);
  log_info(res.diverged ? "rollout diverged (truncated result written)" : "rollout complete");
  return res.diverged ? 3 : 0;
}

int cmd_ablate(const CommonFlags& flags, const std::string& suite) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);
  if (suite != "table2") throw ConfigError("unknown suite: " + suite);

  LoadedData data = load_split(cfg);
  ModelConfig base = model_for_data(cfg, data.train.front());
  TrainConfig tcfg = train_from_config(cfg, seed);
  const std::int64_t steps = tcfg.total_steps;

  auto runs = table2_suite(base);
  auto results = run_ablation(runs, data.train,
                              data.test.empty() ? data.train : data.test, tcfg, steps, out);
  write_results_csv(out + "/results.csv", results);
  write_resolved(cfg, &base, &tcfg, nullptr, seed, out);
  log_info("wrote " + out + "/results.csv");
  return 0;
}

int cmd_grad_check(const CommonFlags& flags, int nodes, double tol, double h) {
  IniConfig cfg = load_config(flags);
  const std::uint64_t seed = required_seed(cfg);
  if (!cfg.has("model", "latent")) cfg.set_int("model", "latent", 8);
  if (!cfg.has("model", "hidden")) cfg.set_int("model", "hidden", 8);
  if (!cfg.has("model", "layers")) cfg.set_int("model", "layers", 1);
  if (!cfg.has("model", "heads")) cfg.set_int("model", "heads", 2);

  // random jittered mesh of roughly the requested size
  SyntheticConfig scfg;
  scfg.nx = std::max(2, nodes / 2);
  scfg.ny = 2;
  scfg.frames = 2;
  scfg.seed = seed;
  Mesh mesh = generate_mesh(scfg);
  Graph graph = build_graph(mesh);

  ModelConfig mcfg = model_from_config(cfg, 3, 3, 2);
  Model model(mcfg);
  ad::ParamStore store;
  model.init_params(store, seed);

  auto rng = make_rng(seed, "gradcheck_inputs");
  std::normal_distribution<double> dist;
  Tensor node_in(graph.num_nodes, 3), target(graph.num_nodes, 2);
  for (auto& v : node_in.data_mut()) v = dist(rng);
  for (auto& v : target.data_mut()) v = dist(rng);
  Tensor edge_in = edge_features(mesh.positions, graph);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(graph.num_nodes), 1);

  FrozenSelection frozen;  // keep the top-k sets fixed across FD evaluations
  auto fn = [&](ad::Tape& tape, ad::TapeBinding& bind) {
    Tensor pred = model.forward(tape, bind, graph, mesh.positions, node_in, edge_in,
                                plain_edge_features(), nullptr, &frozen);
    return tape.l2_loss(pred, target, mask);
  };
  auto rep = ad::grad_check(fn, store, h, tol, seed);
  std::printf("grad-check model=%s nodes=%lld coords=%lld max_rel_err=%.3e worst=%s : %s\n",
              mcfg.cycle.c_str(), static_cast<long long>(graph.num_nodes),
              static_cast<long long>(rep.coords_checked), rep.max_rel_err,
              rep.worst_param.c_str(), rep.pass ? "PASS" : "FAIL");
  return rep.pass ? 0 : 3;
}

int cmd_export(const CommonFlags& flags, const std::string& traj_path,
               const std::string& format, int every) {
  IniConfig cfg = load_config(flags);
  const std::string out = cfg.get("run", "out", "out");
  fs::create_directories(out);
  Trajectory traj = load_trajectory(traj_path);
  for (std::int64_t t = 0; t < traj.num_frames(); t += every) {
    char name[64];
    if (format == "vtk") {
      std::snprintf(name, sizeof name, "frame_%04lld.vtk", static_cast<long long>(t));
      write_vtk_frame(out + "/" + name, traj.mesh, traj.frames[static_cast<std::size_t>(t)],
                      traj.field_names);
    } else if (format == "csv") {
      std::snprintf(name, sizeof name, "frame_%04lld.csv", static_cast<long long>(t));
      write_csv_frame(out + "/" + name, traj.mesh, traj.frames[static_cast<std::size_t>(t)],
                      traj.field_names);
    } else {
      throw ConfigError("unknown export format: " + format);
    }
  }
  log_info("exported frames to " + out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshcycle: attention-augmented message passing with multigrid cycles"};
  app.require_subcommand(1);

  CommonFlags flags;
  int traj_index = 0, every = 1, nodes = 30;
  double tol = 1e-4, h = 1e-5;
  std::string export_format = "none", suite = "table2", traj_path;
  bool selection = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "configuration file");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "run seed (required here or in the config)");
    cmd->add_option("--data", flags.data_path, "dataset manifest");
    cmd->add_option("--ckpt", flags.ckpt_path, "checkpoint path");
    cmd->add_option("--steps", flags.steps, "training steps");
    cmd->add_option("--model", flags.model_kind, "mgn | vcycle | wcycle");
    cmd->add_option("--depth", flags.depth, "cycle depth");
    cmd->add_option("--attention", flags.attention, "node processor: mlp | gat");
    cmd->add_option("--mask-ratio", flags.mask_ratio, "masked-pretraining keep ratio");
    cmd->add_option("--noise", flags.noise, "input noise sigma");
  };

  auto* gen = app.add_subcommand("gen-data", "generate synthetic trajectories");
  add_common(gen);
  auto* pretrain = app.add_subcommand("pretrain", "masked pretraining plus finetuning");
  add_common(pretrain);
  auto* train = app.add_subcommand("train", "plain training");
  add_common(train);
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(evalc);
  auto* roll = app.add_subcommand("rollout", "autoregressive rollout of one trajectory");
  add_common(roll);
  roll->add_option("--traj", traj_index, "trajectory index in the split");
  roll->add_option("--export", export_format, "frame export: none | csv | vtk");
  roll->add_option("--every", every, "export every k-th frame")->check(CLI::PositiveNumber);
  roll->add_flag("--selection", selection, "write per-step node-selection scores");
  auto* ablate = app.add_subcommand("ablate", "run the comparison grid");
  add_common(ablate);
  ablate->add_option("--suite", suite, "grid name (table2)");
  auto* gradc = app.add_subcommand("grad-check", "verify gradients against finite differences");
  add_common(gradc);
  gradc->add_option("--nodes", nodes, "approximate node count");
  gradc->add_option("--tol", tol, "pass threshold on the max relative error");
  gradc->add_option("--fd-step", h, "finite-difference step");
  auto* exportc = app.add_subcommand("export", "convert a trajectory file to CSV or VTK");
  add_common(exportc);
  exportc->add_option("--traj-file", traj_path, "trajectory file")->required();
  exportc->add_option("--format", export_format, "csv | vtk");
  exportc->add_option("--every", every, "export every k-th frame")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    if (gen->parsed()) return cmd_gen_data(flags);
    if (pretrain->parsed()) return cmd_train(flags, true);
    if (train->parsed()) return cmd_train(flags, false);
    if (evalc->parsed()) return cmd_eval(flags);
    if (roll->parsed()) return cmd_rollout(flags, traj_index, export_format, every, selection);
    if (ablate->parsed()) return cmd_ablate(flags, suite);
    if (gradc->parsed()) return cmd_grad_check(flags, nodes, tol, h);
    if (exportc->parsed()) return cmd_export(flags, traj_path, export_format, every);
  } catch (const NumericalError& e) {
    log_warn(std::string("numerical failure: ") + e.what());
    return 3;
  } catch (const ConfigError& e) {
    log_warn(std::string("configuration error: ") + e.what());
    return 2;
  } catch (const StructuralError& e) {
    log_warn(std::string("data error: ") + e.what());
    return 2;
  }
  return 1;
}
