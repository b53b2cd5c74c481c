#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shopsched/genome.hpp"
#include "shopsched/instance.hpp"
#include "shopsched/rng.hpp"
#include "shopsched/sim.hpp"

namespace shopsched {

// --- network ---------------------------------------------------------------

struct NetConfig {
  int input_dim = kFeatureCount;
  int trunk_dim = 512;
  int value_hidden1 = 128;
  int value_hidden2 = 64;
  int policy_hidden = 64;
  int rule_actions = kAgentRuleCount;
  int flip_actions = kFlipActionCount;
};

// Dense layer, row-major weights (out x in). Values are doubles pinned to the
// float32 grid: training math runs in double precision (finite-difference
// checks stay meaningful) while checkpoints serialize exactly.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // out*in
  std::vector<double> bias;     // out
};

// Actor-critic MLP with a shared trunk, a two-layer value head and a policy
// head that emits two categorical groups (rule choice, queue flip).
struct PolicyNet {
  NetConfig config;
  DenseLayer trunk;          // input -> trunk_dim
  DenseLayer value1;         // trunk_dim -> value_hidden1
  DenseLayer value2;         // value_hidden1 -> value_hidden2
  DenseLayer value_out;      // value_hidden2 -> 1
  DenseLayer policy_hidden;  // trunk_dim -> policy_hidden
  DenseLayer policy_out;     // policy_hidden -> rule_actions + flip_actions

  std::vector<DenseLayer*> layers();
  std::vector<const DenseLayer*> layers() const;
  std::size_t parameter_count() const;
};

struct NetOutput {
  std::vector<double> rule_probs;
  std::vector<double> flip_probs;
  std::vector<double> rule_logits;
  std::vector<double> flip_logits;
  double value = 0.0;
};

PolicyNet make_policy_net(const NetConfig&, std::uint64_t seed);
NetOutput net_forward(const PolicyNet&, std::span<const double> input);

// Running mean/variance feature standardizer; lives inside checkpoints so the
// policy sees the same input distribution at inference as in training.
struct RunningNorm {
  std::vector<double> mean;
  std::vector<double> var;
  double count = 0.0;

  explicit RunningNorm(int dim = kFeatureCount)
      : mean(static_cast<std::size_t>(dim), 0.0),
        var(static_cast<std::size_t>(dim), 1.0) {}
  void update(std::span<const double> x);
  std::vector<double> normalize(std::span<const double> x) const;  // clipped to +-10
};

struct Agent {
  PolicyNet net;
  RunningNorm norm;
};

Agent make_agent(const NetConfig&, std::uint64_t seed);

enum class ActMode { Sample, Greedy };

struct ActResult {
  int rule_index = 0;  // into kAgentRules
  int flip_index = 0;  // FlipAction value
  double log_prob_rule = 0.0;
  double log_prob_flip = 0.0;
  double value = 0.0;
};

// Runs the net on raw features (normalizer applied inside). Sampling draws
// from the two categorical heads; greedy takes the per-group argmax (lowest
// index on exact ties). Throws std::invalid_argument on non-finite features
// or a dimension mismatch.
ActResult act(const Agent&, std::span<const double> features, ActMode mode,
              Rng* rng);

// --- rewards ---------------------------------------------------------------

// Two readings of the throughput-improvement bonus condition.
enum class ThroughputBonusMode {
  StrictImprovement,  // current mean throughput > last mean throughput
  RecoveredFromZero,  // last mean throughput == 0 and current > 0
};

// Shaping reward for one transition: `last`/`current` are the feature vectors
// observed at the acting decision and the following one, `rule_index` /
// `flip_index` the actions taken at `last`. Branches, in order: a station
// flip without task competition is penalized; a station flip at an over-loaded
// station or a worker flip at an under-staffed station earns a bonus; slack
// aware rule picks, throughput gains and positive local slack add on top.
double intermediate_reward(const FeatureVector& last, const FeatureVector& current,
                           int rule_index, int flip_index,
                           ThroughputBonusMode mode = ThroughputBonusMode::StrictImprovement);

// Episode-final fitness reward: (label - achieved) * 20 * steps^2. `label` is
// the warm-start solution's objective, `achieved` the episode's objective
// under the same scalarization baseline, `steps` the episode's decision count.
double final_reward(double fitness_label, double fitness_achieved, int steps);

// --- PPO training ----------------------------------------------------------

struct TrainerConfig {
  NetConfig net;
  int total_steps = 30000;        // environment transitions
  int update_episodes = 10;       // rollout episodes per optimizer update
  double learning_rate = 1e-4;    // decays linearly to 0 over total_steps
  double discount = 0.999;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int minibatch_size = 64;
  int epochs_per_update = 4;
  ThroughputBonusMode throughput_bonus = ThroughputBonusMode::StrictImprovement;
  std::uint64_t seed = 1;
};

struct Transition {
  std::vector<double> observation;  // normalized features as seen by the net
  FeatureVector raw_features{};
  int rule_index = 0;
  int flip_index = 0;
  double log_prob = 0.0;  // joint: rule + flip
  double value = 0.0;
  double reward = 0.0;
  bool episode_end = false;
};

struct UpdateLog {
  int update = 0;
  int steps_done = 0;
  double learning_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_episode_reward = 0.0;  // over the update's rollout episodes
};

struct TrainResult {
  Agent agent;
  std::vector<UpdateLog> updates;
  int steps_done = 0;
  int episodes_done = 0;
};

// Thrown when an update produces a non-finite loss or parameter.
struct TrainingDiverged : std::runtime_error {
  int update_index;
  TrainingDiverged(int update, const std::string& what)
      : std::runtime_error(what), update_index(update) {}
};

// On-policy training against repeated decodes of `sample`: each episode
// simulates the instance with sampled actions (no genome writeback), shaping
// rewards between consecutive decisions and the fitness-gap reward at the
// end. `fitness_label` and `baseline` come from the warm start that produced
// `sample`. Progress callback (optional) receives each UpdateLog.
TrainResult ppo_train(const ProblemInstance&, const Genome& sample,
                      double fitness_label, const ScheduleMetrics& baseline,
                      const TrainerConfig&,
                      const std::function<void(const UpdateLog&)>& on_update = {});

// --- persistence -----------------------------------------------------------

// Versioned binary checkpoint: magic, version, net config, shape table, then
// little-endian float32 blobs row-major per layer (normalizer statistics are
// entries of the same table). Loading validates magic, version, shapes and
// exact length.
std::vector<std::uint8_t> save_policy(const Agent&);
Agent load_policy(std::span<const std::uint8_t> bytes);

// Decision handler wrapping an agent for policy-injected decoding (greedy) or
// rollout collection (sampling). The handler maps rule/flip indices onto the
// simulator's action types.
class AgentHandler : public DecisionHandler {
 public:
  AgentHandler(const Agent& agent, ActMode mode, std::uint64_t seed);
  Decision decide(const DecisionPoint& pending) override;
  void episode_end(const FeatureVector&) override;

  // Rollout bookkeeping for the trainer.
  struct Step {
    FeatureVector raw{};
    std::vector<double> observation;
    ActResult action;
  };
  const std::vector<Step>& steps() const { return steps_; }
  const std::optional<FeatureVector>& terminal_features() const {
    return terminal_;
  }
  void update_norm_stats(RunningNorm& norm) const;  // feeds raw observations

 private:
  const Agent& agent_;
  ActMode mode_;
  Rng rng_;
  std::vector<Step> steps_;
  std::optional<FeatureVector> terminal_;
};

}  // namespace shopsched
