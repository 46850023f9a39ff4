#pragma once
// Autoregressive rollout, RMSE reporting, and the ablation grid.

#include <functional>
#include <string>
#include <vector>

#include "meshcycle/multigrid.hpp"
#include "meshcycle/trainer.hpp"

namespace mc {

struct RolloutResult {
  std::vector<ad::Tensor> predicted;  // frames, including the initial one
  std::vector<double> step_rmse;      // raw units, dynamic nodes, selected channels
  double rmse_1 = 0.0;                // first step of the series
  double rmse_all = 0.0;              // pooled over all steps, then sqrt
  double rmse_all_mean_steps = 0.0;   // mean of the per-step series
  bool diverged = false;
};

// Produces the full next state given the current one; the rollout overwrites
// boundary rows from ground truth afterwards.
using StepFn = std::function<ad::Tensor(const ad::Tensor& state, int t)>;

// steps <= T-1; empty channel set means all channels.
RolloutResult rollout(const StepFn& step, const Trajectory& truth, const TrajCache& cache,
                      int steps = -1, const std::vector<int>& channels = {});

StepFn model_stepper(const Model& model, ad::ParamStore& store, const Normalizers& norms,
                     const TrajCache& cache, SelectionLog* selection_log = nullptr);

StepFn oracle_stepper(const Mesh& mesh, const Graph& graph, const SyntheticConfig& cfg);

// Pooled-then-sqrt RMSE over (frames x masked nodes x selected channels).
double rmse(const std::vector<ad::Tensor>& pred, const std::vector<ad::Tensor>& truth,
            const std::vector<std::uint8_t>& node_mask, const std::vector<int>& channels);

// Aggregate evaluation over a test set (squared errors pooled across
// trajectories before the square root).
struct EvalSummary {
  double rmse_1 = 0.0;
  double rmse_all = 0.0;
  double rmse_all_mean_steps = 0.0;
  int diverged = 0;
};
EvalSummary evaluate(const Model& model, ad::ParamStore& store, const Normalizers& norms,
                     const std::vector<Trajectory>& test, int rollout_steps = -1);

struct AblationRun {
  std::string method;
  ModelConfig model_cfg;
  bool masked_pretrain = false;
};

struct AblationResult {
  std::string method;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  double rmse_1 = 0.0;
  double rmse_all = 0.0;
  double rmse_all_mean_steps = 0.0;
  std::string status;  // "ok" or the failure reason
};

// The published comparison rows: plain message passing, attention, masking,
// V/W cycles at both depths, and the combined model.
std::vector<AblationRun> table2_suite(const ModelConfig& base);

// Trains and evaluates each run on the same data and seed; individual
// failures are recorded and the grid continues.
std::vector<AblationResult> run_ablation(const std::vector<AblationRun>& runs,
                                         const std::vector<Trajectory>& train,
                                         const std::vector<Trajectory>& test,
                                         const TrainConfig& base, std::int64_t steps,
                                         const std::string& out_dir);

void write_results_csv(const std::string& path, const std::vector<AblationResult>& results);

void write_selection_csv(const std::string& path, const std::vector<SelectionLog>& per_step);

}  // namespace mc
