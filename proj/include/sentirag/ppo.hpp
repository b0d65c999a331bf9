#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentirag/classifier.hpp"
#include "sentirag/corpus.hpp"
#include "sentirag/mlp.hpp"
#include "sentirag/retrieval.hpp"
#include "sentirag/weights.hpp"

namespace sentirag {

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct EnvState {
  std::vector<double> weights;   // current source weights, on the simplex
  std::vector<double> features;  // rolling accuracy, cue one-hot, progress

  // weights followed by features; the network input.
  std::vector<double> vector() const;
};

struct EnvConfig {
  std::size_t accuracy_window = 20;
  // When set, items whose |next-day return| <= zone yield no step.
  bool neutral_zone_rewards = false;
  double zone = 0.005;
};

// Number of step features: rolling accuracy, three cue slots, progress.
inline constexpr std::size_t kEnvFeatureCount = 5;

struct StepResult {
  EnvState next_state;
  std::optional<double> reward;  // +1 / -1; empty when the step was skipped
  bool done = false;             // episode exhausted
  std::string error;             // pipeline or backend failure, if any
};

// Each episode walks the dataset in order; the agent chooses the source
// weights used for each item's retrieval, and is rewarded +1 when the
// classifier's prediction equals the item's market-grounded label, else -1.
// Items with Unknown truth are passed over without a step.
class SourceWeightEnv {
 public:
  SourceWeightEnv(std::span<const TestItem> dataset, const RagPipeline& pipeline,
                  ClassifierBackend& backend, SourceWeights initial, EnvConfig config = {});

  // InputError on an empty dataset or one with no labeled items.
  EnvState reset(std::uint64_t seed);
  // Action weights must lie on the simplex (InputError otherwise).
  StepResult step(std::span<const double> action_weights);

  std::size_t num_sources() const { return initial_.size(); }
  std::size_t state_dim() const { return initial_.size() + kEnvFeatureCount; }
  const SourceWeights& initial_weights() const { return initial_; }
  const TestItem* current_item() const;

 private:
  void skip_unusable();
  EnvState observe(std::vector<double> weights) const;

  std::span<const TestItem> dataset_;
  const RagPipeline& pipeline_;
  ClassifierBackend& backend_;
  SourceWeights initial_;
  EnvConfig config_;
  std::size_t pos_ = 0;
  std::uint64_t episode_seed_ = 0;
  std::deque<double> recent_;
};

// ---------------------------------------------------------------------------
// Objective pieces
// ---------------------------------------------------------------------------

// One-step advantage r + gamma * v_next - v_curr. InputError unless gamma in [0,1].
double advantage(double reward, double gamma, double v_next, double v_curr);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A). InputError unless
// ratio > 0 and eps > 0.
double clipped_objective(double ratio, double adv, double eps);

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

// Gaussian over per-source logits; softmax of a logit sample is the action.
// Parameters: MLP weights followed by one log-std per source.
class GaussianSoftmaxPolicy {
 public:
  GaussianSoftmaxPolicy() = default;
  GaussianSoftmaxPolicy(std::size_t state_dim, std::size_t num_sources,
                        std::vector<std::size_t> hidden, Rng& rng, double init_log_std);
  // InputError when `params` does not fit the architecture.
  GaussianSoftmaxPolicy(std::size_t state_dim, std::size_t num_sources,
                        std::vector<std::size_t> hidden, std::vector<double> params);

  std::size_t num_sources() const { return net_.output_dim(); }
  std::size_t state_dim() const { return net_.input_dim(); }
  const Mlp& net() const { return net_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> mean_logits(std::span<const double> state) const;
  // Deterministic action: softmax of the mean logits.
  std::vector<double> mean_action(std::span<const double> state) const;

  struct Sample {
    std::vector<double> logits;
    std::vector<double> weights;
    double log_prob = 0.0;
  };
  Sample sample(std::span<const double> state, Rng& rng) const;

  double log_prob(std::span<const double> params, std::span<const double> state,
                  std::span<const double> logits) const;

 private:
  Mlp net_;
  std::vector<double> params_;
};

class ValueFunction {
 public:
  ValueFunction() = default;
  ValueFunction(std::size_t state_dim, std::vector<std::size_t> hidden, Rng& rng);
  ValueFunction(std::size_t state_dim, std::vector<std::size_t> hidden, std::vector<double> params);

  const Mlp& net() const { return net_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double value(std::span<const double> state) const;
  double value(std::span<const double> params, std::span<const double> state) const;

 private:
  Mlp net_;
  std::vector<double> params_;
};

// One recorded interaction.
struct TrajectoryStep {
  std::vector<double> state;
  std::vector<double> next_state;
  std::vector<double> logits;  // sampled action logits
  double log_prob = 0.0;       // under the behaviour policy
  double reward = 0.0;         // +1 / -1
  double value = 0.0;          // V(state) at collection time
};

using Trajectory = std::vector<TrajectoryStep>;

// Mean clipped surrogate over `batch` (with per-step advantages) at policy
// parameters `params`; adds d(objective)/d(params) to `grad` when given.
double surrogate_objective(const GaussianSoftmaxPolicy& policy, std::span<const double> params,
                           std::span<const TrajectoryStep> batch, std::span<const double> advantages,
                           double eps, std::span<double> grad = {});

// Mean of (V(s) - target)^2 at value parameters `params`; adds the gradient
// to `grad` when given.
double value_loss(const ValueFunction& value, std::span<const double> params,
                  std::span<const TrajectoryStep> batch, std::span<const double> targets,
                  std::span<double> grad = {});

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct PpoHyperparams {
  double gamma = 0.99;
  double clip = 0.2;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t minibatch_size = 64;
  std::size_t epochs = 10;
  std::size_t total_steps = 20000;
  std::vector<std::size_t> hidden = {64, 64};
  double init_log_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BatchReport {
  std::size_t batch = 0;
  double mean_reward = 0.0;
  double policy_objective = 0.0;  // mean clipped surrogate after the update
  double value_loss = 0.0;        // after the update
};

struct PpoResult {
  GaussianSoftmaxPolicy policy;
  ValueFunction value;
  std::vector<BatchReport> report;
  std::vector<EnvState> last_states;  // states of the final batch
  std::size_t steps = 0;
};

// Clipped-surrogate PPO with one-step advantages. Deterministic for a fixed
// seed. DivergenceError on any non-finite loss or parameter.
PpoResult ppo_train(SourceWeightEnv& env, const PpoHyperparams& hp);

// Mean over `states` of the policy's deterministic action, renormalized.
// InputError on an empty sample.
SourceWeights extract_policy_weights(const GaussianSoftmaxPolicy& policy,
                                     std::span<const EnvState> states,
                                     const std::vector<std::string>& sources);

struct RolloutResult {
  std::vector<EnvState> states;
  std::vector<double> rewards;
  double mean_reward() const;
};

// Plays up to `max_steps` rewarded steps. With `policy`, actions are the
// policy's deterministic mean actions; otherwise `fixed` weights are used.
RolloutResult rollout(SourceWeightEnv& env, std::uint64_t seed, std::size_t max_steps,
                      const GaussianSoftmaxPolicy* policy, const std::vector<double>& fixed = {});

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct PolicyCheckpoint {
  GaussianSoftmaxPolicy policy;
  ValueFunction value;
  std::vector<std::string> sources;
  PpoHyperparams hyperparams;
  std::string config_hash;
};

std::string hyperparams_hash(const PpoHyperparams& hp, const std::vector<std::string>& sources,
                             const EnvConfig& env);

void save_checkpoint(const std::string& path, const PolicyCheckpoint& ckpt);
// InputError on a missing file, unknown format version or inconsistent shapes.
PolicyCheckpoint load_checkpoint(const std::string& path);

void write_training_report(const std::string& path, std::span<const BatchReport> report);

}  // namespace sentirag
