#pragma once
// Training pipeline: delta-target construction with input noise, masked-node
// pretraining with interpolation back onto the fine graph, disjoint-union
// batching, Adam with the plateau-then-exponential schedule, and the
// two-phase masked-pretrain/finetune driver.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "meshcycle/adam.hpp"
#include "meshcycle/model.hpp"
#include "meshcycle/normalizer.hpp"
#include "meshcycle/synthdata.hpp"

namespace mc {

struct TrainConfig {
  enum class Phase { kPlain, kMaskedPretrain, kFinetune };

  int batch_size = 2;
  std::int64_t total_steps = 0;
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  std::int64_t decay_window = -1;  // -1 selects the last half of total_steps
  double noise_sigma = 0.02;       // dynamic channels; channels named "pressure" stay clean
  std::vector<double> noise_per_channel;  // optional per-channel override
  double mask_keep_ratio = 0.85;
  Phase phase = Phase::kPlain;
  std::int64_t normalizer_warmup = 10000;  // samples
  double self_conditioning_p = 0.0;  // finetune only: P(one-step loss); 0 disables entirely
  std::uint64_t seed = 0;

  void validate() const;
};

// lr_start until the decay window begins, then geometric decay to lr_end.
double lr_at(std::int64_t step, const TrainConfig& cfg);

std::vector<double> resolve_noise_sigma(const TrainConfig& cfg,
                                        const std::vector<std::string>& field_names);

// Gaussian noise on the dynamic channels of dynamic (non-boundary) rows.
ad::Tensor add_noise(const ad::Tensor& fields, const std::vector<double>& sigma,
                     const std::vector<std::uint8_t>& dynamic_rows, std::mt19937_64& rng);

// Sorted uniform subset of round(keep_ratio * n) nodes (at least one).
std::vector<std::int64_t> mask_nodes(std::int64_t num_nodes, double keep_ratio,
                                     std::mt19937_64& rng);

struct Normalizers {
  Normalizer node, edge, target;
};

// Cached per-trajectory structures shared by training and evaluation.
struct TrajCache {
  const Trajectory* traj = nullptr;
  Graph graph;
  ad::Tensor static_cols;  // N x (one-hot + globals)
  ad::Tensor raw_edges;    // geometric edge features
  std::vector<std::uint8_t> dynamic;  // 1 where the loss applies
};

TrajCache build_cache(const Trajectory& traj);

// [state | one-hot | globals], unnormalized.
ad::Tensor assemble_node_input(const ad::Tensor& state, const TrajCache& cache);

// Edge featurizer for the cycle runner that applies the shared normalizer.
EdgeEncoder normalized_edge_featurizer(const Normalizer& edge_norm);

// Append-only CSV of (step, phase, loss, lr); byte-identical across reruns
// with the same seed and config.
class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path);
  void append(std::int64_t step, const std::string& phase, double loss, double lr);

 private:
  std::ofstream out_;
};

struct Sample {
  int traj = 0;
  int frame = 0;
};

class Trainer {
 public:
  Trainer(const Model& model, ad::ParamStore& store, Normalizers& norms,
          const std::vector<Trajectory>& data, TrainConfig cfg);

  // One optimization step: draw a batch, compute gradients, apply Adam.
  double step();
  // Gradient computation alone (store grads are zeroed first).
  double compute_grads(const std::vector<Sample>& batch);
  void apply_update() { adam_.step(store_, current_lr()); }

  void run(std::int64_t steps, MetricsLog* log, const std::string& phase_tag,
           const std::string& diagnostic_path = "");

  std::int64_t current_step() const { return step_; }
  std::int64_t samples_seen() const { return samples_seen_; }
  double current_lr() const { return lr_at(step_, cfg_); }
  Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }
  std::vector<Sample> draw_batch();

  // Exact resume: replays the data/noise/mask draws of the first `step`
  // steps so the RNG streams line up, without touching parameters or the
  // (already restored) normalizer statistics.
  void resume_to(std::int64_t step, std::int64_t samples_seen);

 private:
  const Model& model_;
  ad::ParamStore& store_;
  Normalizers& norms_;
  const std::vector<Trajectory>& data_;
  TrainConfig cfg_;
  std::vector<TrajCache> caches_;
  std::vector<double> noise_sigma_;
  double island_shift_ = 0.0;

  Adam adam_;
  std::mt19937_64 data_rng_, noise_rng_, mask_rng_, selfcond_rng_;
  std::vector<Sample> epoch_;
  std::size_t cursor_ = 0;
  std::int64_t step_ = 0;
  std::int64_t samples_seen_ = 0;

  double grads_one_step(const std::vector<Sample>& batch, bool masked);
  double grads_two_step(const std::vector<Sample>& batch);
};

struct TwoPhaseResult {
  std::string pretrain_checkpoint;
  std::string final_checkpoint;
};

// Masked pretraining followed by unmasked finetuning with a fresh schedule
// and optimizer; checkpoints written at the phase boundary and at the end.
TwoPhaseResult run_two_phase(const Model& model, ad::ParamStore& store, Normalizers& norms,
                             const std::vector<Trajectory>& data, const TrainConfig& base,
                             std::int64_t pretrain_steps, std::int64_t finetune_steps,
                             const std::string& out_dir, MetricsLog* log);

void save_training_state(const std::string& path, const ad::ParamStore& store,
                         const Adam& adam, const Normalizers& norms, std::int64_t step,
                         const std::string& phase, const std::string& config_guard,
                         std::int64_t samples_seen = 0);

// Restores parameters, moments, and normalizers; throws ConfigError on a
// guard or shape mismatch.
void load_training_state(const std::string& path, ad::ParamStore& store, Adam& adam,
                         Normalizers& norms, std::int64_t& step, std::string& phase,
                         const std::string& expected_guard, std::int64_t* samples_seen = nullptr);

}  // namespace mc
