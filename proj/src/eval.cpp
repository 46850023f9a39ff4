#include "meshcycle/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "meshcycle/common.hpp"

namespace mc {

using ad::Tape;
using ad::TapeBinding;
using ad::Tensor;

namespace {

std::vector<int> resolve_channels(const std::vector<int>& channels, std::int64_t width) {
  if (channels.empty()) {
    std::vector<int> all(static_cast<std::size_t>(width));
    for (std::int64_t c = 0; c < width; ++c) all[static_cast<std::size_t>(c)] = static_cast<int>(c);
    return all;
  }
  for (int c : channels)
    if (c < 0 || c >= width) throw ConfigError("rmse: channel index out of range");
  return channels;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

RolloutResult rollout(const StepFn& step, const Trajectory& truth, const TrajCache& cache,
                      int steps, const std::vector<int>& channels) {
  if (truth.num_frames() < 2) throw ConfigError("rollout: need at least two frames");
  const int max_steps = static_cast<int>(truth.num_frames()) - 1;
  const int n_steps = steps < 0 ? max_steps : std::min(steps, max_steps);
  if (n_steps < 1) throw ConfigError("rollout: need at least one step");

  const auto chans = resolve_channels(channels, truth.num_fields());
  const std::int64_t n = truth.mesh.num_nodes();
  const std::int64_t f = truth.num_fields();

  std::int64_t dyn_count = 0;
  for (auto d : cache.dynamic) dyn_count += d ? 1 : 0;

  RolloutResult res;
  Tensor state = truth.frames[0].clone();
  res.predicted.push_back(state.clone());
  const double norm0 = l2_norm(state);

  double pooled_sq = 0.0;
  std::int64_t pooled_n = 0;
  for (int t = 0; t < n_steps; ++t) {
    Tensor next = step(state, t);
    // boundary rows follow the ground-truth boundary conditions
    const auto& truth_next = truth.frames[static_cast<std::size_t>(t) + 1];
    auto nd = next.data_mut();
    for (std::int64_t i = 0; i < n; ++i)
      if (!cache.dynamic[static_cast<std::size_t>(i)])
        for (std::int64_t c = 0; c < f; ++c) nd[i * f + c] = truth_next.at(i, c);

    double sq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (!cache.dynamic[static_cast<std::size_t>(i)]) continue;
      for (int c : chans) {
        const double d = next.at(i, c) - truth_next.at(i, c);
        sq += d * d;
      }
    }
    const auto count = dyn_count * static_cast<std::int64_t>(chans.size());
    res.step_rmse.push_back(std::sqrt(sq / static_cast<double>(std::max<std::int64_t>(count, 1))));
    pooled_sq += sq;
    pooled_n += count;

    res.predicted.push_back(next.clone());
    state = next;

    if (l2_norm(state) > 1e3 * (norm0 + 1.0)) {
      res.diverged = true;
      break;
    }
  }

  res.rmse_1 = res.step_rmse.front();
  res.rmse_all = std::sqrt(pooled_sq / static_cast<double>(std::max<std::int64_t>(pooled_n, 1)));
  double mean = 0.0;
  for (double v : res.step_rmse) mean += v;
  res.rmse_all_mean_steps = mean / static_cast<double>(res.step_rmse.size());
  return res;
}

StepFn model_stepper(const Model& model, ad::ParamStore& store, const Normalizers& norms,
                     const TrajCache& cache, SelectionLog* selection_log) {
  // inference: no noise, no masking; deltas denormalized and integrated
  Tensor edge_in = norms.edge.normalize(cache.raw_edges);
  return [&model, &store, &norms, &cache, edge_in, selection_log](const Tensor& state,
                                                                  int) -> Tensor {
    Tape tape;
    TapeBinding bind(tape, store);
    Tensor node_in = norms.node.normalize(assemble_node_input(state, cache));
    Tensor pred =
        model.forward(tape, bind, cache.graph, cache.traj->mesh.positions, node_in, edge_in,
                      normalized_edge_featurizer(norms.edge), selection_log);
    Tensor delta = norms.target.denormalize(pred);
    Tensor next = state.clone();
    auto nd = next.data_mut();
    auto dd = delta.data();
    for (std::int64_t i = 0; i < next.size(); ++i) nd[i] += dd[i];
    return next;
  };
}

StepFn oracle_stepper(const Mesh& mesh, const Graph& graph, const SyntheticConfig& cfg) {
  return [&mesh, &graph, &cfg](const Tensor& state, int) {
    return oracle_step(mesh, graph, cfg, state);
  };
}

double rmse(const std::vector<Tensor>& pred, const std::vector<Tensor>& truth,
            const std::vector<std::uint8_t>& node_mask, const std::vector<int>& channels) {
  if (pred.size() != truth.size()) throw StructuralError("rmse: frame count mismatch");
  if (pred.empty()) throw StructuralError("rmse: no frames");
  const std::int64_t n = pred[0].rows();
  const auto chans = resolve_channels(channels, pred[0].cols());
  if (static_cast<std::int64_t>(node_mask.size()) != n)
    throw StructuralError("rmse: mask length mismatch");

  double sq = 0.0;
  std::int64_t count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].rows() != n || truth[t].rows() != n || pred[t].cols() != truth[t].cols())
      throw StructuralError("rmse: shape mismatch");
    for (std::int64_t i = 0; i < n; ++i) {
      if (!node_mask[static_cast<std::size_t>(i)]) continue;
      for (int c : chans) {
        const double d = pred[t].at(i, c) - truth[t].at(i, c);
        sq += d * d;
        ++count;
      }
    }
  }
  return std::sqrt(sq / static_cast<double>(std::max<std::int64_t>(count, 1)));
}

EvalSummary evaluate(const Model& model, ad::ParamStore& store, const Normalizers& norms,
                     const std::vector<Trajectory>& test, int rollout_steps) {
  // rollouts run concurrently against read-only weights; aggregation is by
  // trajectory index, so the result does not depend on scheduling
  std::vector<RolloutResult> per_traj(test.size());
  parallel_for(static_cast<std::int64_t>(test.size()), [&](std::int64_t i) {
    const auto& traj = test[static_cast<std::size_t>(i)];
    TrajCache cache = build_cache(traj);
    per_traj[static_cast<std::size_t>(i)] =
        rollout(model_stepper(model, store, norms, cache), traj, cache, rollout_steps);
  });

  EvalSummary summary;
  double sq1 = 0.0, sq_all = 0.0, mean_steps = 0.0;
  std::int64_t n1 = 0, n_all = 0;
  for (const auto& res : per_traj) {
    sq1 += res.rmse_1 * res.rmse_1;
    ++n1;
    sq_all += res.rmse_all * res.rmse_all;
    ++n_all;
    mean_steps += res.rmse_all_mean_steps;
    summary.diverged += res.diverged ? 1 : 0;
  }
  summary.rmse_1 = std::sqrt(sq1 / static_cast<double>(std::max<std::int64_t>(n1, 1)));
  summary.rmse_all = std::sqrt(sq_all / static_cast<double>(std::max<std::int64_t>(n_all, 1)));
  summary.rmse_all_mean_steps = mean_steps / static_cast<double>(std::max<std::int64_t>(n_all, 1));
  return summary;
}

std::vector<AblationRun> table2_suite(const ModelConfig& base) {
  auto with = [&](const std::string& cycle, NodeProcessor proc) {
    ModelConfig cfg = base;
    cfg.cycle = cycle;
    cfg.processor = proc;
    return cfg;
  };
  std::vector<AblationRun> runs;
  runs.push_back({"mgn", with("15", NodeProcessor::kMlp), false});
  runs.push_back({"mgn_attention", with("15", NodeProcessor::kGat), false});
  runs.push_back({"mgn_masking", with("15", NodeProcessor::kMlp), true});
  runs.push_back({"vcycle_d1", with("4D10U1", NodeProcessor::kMlp), false});
  runs.push_back({"vcycle_d2", with("3D3D4U2U3", NodeProcessor::kMlp), false});
  runs.push_back({"wcycle_d1", with("3D4U3D4U1", NodeProcessor::kMlp), false});
  runs.push_back({"wcycle_d2", with("2D2D2U1D2U2U4", NodeProcessor::kMlp), false});
  runs.push_back({"wcycle_masking_attention", with("3D4U3D4U1", NodeProcessor::kGat), true});
  return runs;
}

std::vector<AblationResult> run_ablation(const std::vector<AblationRun>& runs,
                                         const std::vector<Trajectory>& train,
                                         const std::vector<Trajectory>& test,
                                         const TrainConfig& base, std::int64_t steps,
                                         const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<AblationResult> results;
  for (const auto& run : runs) {
    AblationResult r;
    r.method = run.method;
    r.seed = base.seed;
    r.steps = steps;
    try {
      Model model(run.model_cfg);
      ad::ParamStore store;
      model.init_params(store, base.seed);
      Normalizers norms;
      const std::string run_dir = out_dir + "/" + run.method;
      if (run.masked_pretrain) {
        run_two_phase(model, store, norms, train, base, steps / 2, steps - steps / 2,
                      run_dir, nullptr);
      } else {
        TrainConfig cfg = base;
        cfg.phase = TrainConfig::Phase::kPlain;
        cfg.total_steps = steps;
        Trainer trainer(model, store, norms, train, cfg);
        trainer.run(steps, nullptr, "plain");
      }
      EvalSummary summary = evaluate(model, store, norms, test);
      r.rmse_1 = summary.rmse_1;
      r.rmse_all = summary.rmse_all;
      r.rmse_all_mean_steps = summary.rmse_all_mean_steps;
      r.status = summary.diverged > 0 ? "diverged" : "ok";
    } catch (const std::exception& e) {
      r.status = std::string("failed: ") + e.what();
    }
    results.push_back(std::move(r));
    log_info("ablation " + run.method + ": " + results.back().status);
  }
  return results;
}

void write_results_csv(const std::string& path, const std::vector<AblationResult>& results) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw StructuralError("cannot open for writing: " + path);
  std::fprintf(f, "method,seed,steps,rmse_1,rmse_all,rmse_all_mean_steps,status\n");
  for (const auto& r : results)
    std::fprintf(f, "%s,%llu,%lld,%.17g,%.17g,%.17g,%s\n", r.method.c_str(),
                 static_cast<unsigned long long>(r.seed), static_cast<long long>(r.steps),
                 r.rmse_1, r.rmse_all, r.rmse_all_mean_steps, r.status.c_str());
  std::fclose(f);
}

void write_selection_csv(const std::string& path, const std::vector<SelectionLog>& per_step) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw StructuralError("cannot open for writing: " + path);
  std::fprintf(f, "step,level,node,kept,score\n");
  for (std::size_t t = 0; t < per_step.size(); ++t)
    for (const auto& row : per_step[t].rows)
      std::fprintf(f, "%zu,%d,%lld,%d,%.17g\n", t, row.level,
                   static_cast<long long>(row.node), row.kept ? 1 : 0, row.score);
  std::fclose(f);
}

}  // namespace mc
