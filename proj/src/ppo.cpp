#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shopsched/agent.hpp"
#include "shopsched/ppo_detail.hpp"

namespace shopsched {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-5;

double pin(double x) { return static_cast<double>(static_cast<float>(x)); }
double lrelu(double x) { return x >= 0.0 ? x : 0.01 * x; }
double lrelu_grad(double pre) { return pre >= 0.0 ? 1.0 : 0.01; }

// Per-layer gradient (and Adam moment) storage, same shapes as the net.
struct GradBuffer {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  explicit GradBuffer(const PolicyNet& net) {
    for (const DenseLayer* layer : net.layers()) {
      weights.emplace_back(layer->weights.size(), 0.0);
      bias.emplace_back(layer->bias.size(), 0.0);
    }
  }
  void zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
  }
};

std::vector<double> affine(const DenseLayer& layer, const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(layer.out));
  for (int r = 0; r < layer.out; ++r) {
    double acc = layer.bias[static_cast<std::size_t>(r)];
    const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
    for (int c = 0; c < layer.in; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

std::vector<double> activated(const std::vector<double>& pre) {
  std::vector<double> out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = lrelu(pre[i]);
  return out;
}

struct ForwardCache {
  std::vector<double> x;
  std::vector<double> a0, h0;  // trunk
  std::vector<double> a1, h1;  // value hidden 1
  std::vector<double> a2, h2;  // value hidden 2
  std::vector<double> a3, h3;  // policy hidden
  std::vector<double> rule_probs, flip_probs;
  double value = 0.0;
};

std::vector<double> softmax(const std::vector<double>& logits) {
  double top = logits[0];
  for (double v : logits) top = std::max(top, v);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

ForwardCache forward_cached(const PolicyNet& net, const std::vector<double>& x) {
  ForwardCache c;
  c.x = x;
  c.a0 = affine(net.trunk, x);
  c.h0 = activated(c.a0);
  c.a1 = affine(net.value1, c.h0);
  c.h1 = activated(c.a1);
  c.a2 = affine(net.value2, c.h1);
  c.h2 = activated(c.a2);
  c.value = affine(net.value_out, c.h2)[0];
  c.a3 = affine(net.policy_hidden, c.h0);
  c.h3 = activated(c.a3);
  const std::vector<double> logits = affine(net.policy_out, c.h3);
  const auto split = logits.begin() + net.config.rule_actions;
  c.rule_probs = softmax({logits.begin(), split});
  c.flip_probs = softmax({split, logits.end()});
  return c;
}

// d(loss)/d(pre-activation of `layer`'s output) -> weight/bias grads plus the
// gradient wrt the layer input, accumulated into `grads`.
std::vector<double> backprop_layer(const DenseLayer& layer,
                                   const std::vector<double>& input,
                                   const std::vector<double>& dout,
                                   std::vector<double>& wgrad,
                                   std::vector<double>& bgrad) {
  std::vector<double> dinput(static_cast<std::size_t>(layer.in), 0.0);
  for (int r = 0; r < layer.out; ++r) {
    const double d = dout[static_cast<std::size_t>(r)];
    if (d == 0.0) continue;
    bgrad[static_cast<std::size_t>(r)] += d;
    double* wrow = wgrad.data() + static_cast<std::size_t>(r) * layer.in;
    const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
    for (int cidx = 0; cidx < layer.in; ++cidx) {
      wrow[cidx] += d * input[static_cast<std::size_t>(cidx)];
      dinput[static_cast<std::size_t>(cidx)] += d * row[cidx];
    }
  }
  return dinput;
}

void apply_activation_grad(const std::vector<double>& pre, std::vector<double>& d) {
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= lrelu_grad(pre[i]);
}

// Accumulates parameter gradients for one sample given the loss gradients at
// the two output heads. Layer order in `grads` matches PolicyNet::layers():
// trunk, value1, value2, value_out, policy_hidden, policy_out.
void backward(const PolicyNet& net, const ForwardCache& c,
              const std::vector<double>& dlogits, double dvalue,
              GradBuffer& grads) {
  // Value head.
  std::vector<double> dh0_value;
  {
    std::vector<double> dv{dvalue};
    std::vector<double> dh2 =
        backprop_layer(net.value_out, c.h2, dv, grads.weights[3], grads.bias[3]);
    apply_activation_grad(c.a2, dh2);
    std::vector<double> dh1 =
        backprop_layer(net.value2, c.h1, dh2, grads.weights[2], grads.bias[2]);
    apply_activation_grad(c.a1, dh1);
    dh0_value =
        backprop_layer(net.value1, c.h0, dh1, grads.weights[1], grads.bias[1]);
  }
  // Policy head.
  std::vector<double> dh3 =
      backprop_layer(net.policy_out, c.h3, dlogits, grads.weights[5], grads.bias[5]);
  apply_activation_grad(c.a3, dh3);
  std::vector<double> dh0 =
      backprop_layer(net.policy_hidden, c.h0, dh3, grads.weights[4], grads.bias[4]);
  for (std::size_t i = 0; i < dh0.size(); ++i) dh0[i] += dh0_value[i];
  apply_activation_grad(c.a0, dh0);
  backprop_layer(net.trunk, c.x, dh0, grads.weights[0], grads.bias[0]);
}

double entropy_of(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct AdamState {
  GradBuffer m;
  GradBuffer v;
  long t = 0;

  explicit AdamState(const PolicyNet& net) : m(net), v(net) {}
};

void adam_step(PolicyNet& net, const GradBuffer& grads, AdamState& state,
               double lr, double max_grad_norm) {
  double sq_norm = 0.0;
  for (const auto& w : grads.weights) {
    for (double g : w) sq_norm += g * g;
  }
  for (const auto& b : grads.bias) {
    for (double g : b) sq_norm += g * g;
  }
  const double norm = std::sqrt(sq_norm);
  const double scale = norm > max_grad_norm ? max_grad_norm / norm : 1.0;

  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));

  const auto layers = net.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    auto update = [&](std::vector<double>& params, const std::vector<double>& grad,
                      std::vector<double>& m, std::vector<double>& v) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] * scale;
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] = pin(params[i] - lr * mhat / (std::sqrt(vhat) + kAdamEps));
      }
    };
    update(layers[li]->weights, grads.weights[li], state.m.weights[li],
           state.v.weights[li]);
    update(layers[li]->bias, grads.bias[li], state.m.bias[li], state.v.bias[li]);
  }
}

bool net_finite(const PolicyNet& net) {
  for (const DenseLayer* layer : net.layers()) {
    for (double w : layer->weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer->bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

// Un-averaged per-sample loss terms; callers divide by the minibatch size.
struct SampleStats {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

// One sample's loss contributions and, scaled by `inv` (1/minibatch size),
// its parameter gradients. Shared by the optimizer loop and the exposed
// gradient-verification entry point.
void accumulate_sample(const PolicyNet& net, const std::vector<double>& observation,
                       int rule_index, int flip_index, double old_log_prob,
                       double adv, double value_target, double clip_ratio,
                       double value_coef, double entropy_coef, double inv,
                       GradBuffer& grads, SampleStats& stats) {
  const ForwardCache cache = forward_cached(net, observation);

  const double lp_rule =
      std::log(cache.rule_probs[static_cast<std::size_t>(rule_index)]);
  const double lp_flip =
      std::log(cache.flip_probs[static_cast<std::size_t>(flip_index)]);
  const double ratio = std::exp(lp_rule + lp_flip - old_log_prob);
  const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
  const double surr1 = ratio * adv;
  const double surr2 = clipped * adv;
  stats.policy += -std::min(surr1, surr2);

  const double verr = cache.value - value_target;
  stats.value += verr * verr;
  const double h_rule = entropy_of(cache.rule_probs);
  const double h_flip = entropy_of(cache.flip_probs);
  stats.entropy += h_rule + h_flip;

  const double dvalue = value_coef * 2.0 * verr * inv;
  std::vector<double> dlogits(
      static_cast<std::size_t>(net.config.rule_actions + net.config.flip_actions),
      0.0);
  if (surr1 <= surr2) {  // gradient flows only through the unclipped arm
    const double coef = -adv * ratio * inv;
    for (int i = 0; i < net.config.rule_actions; ++i) {
      const double p = cache.rule_probs[static_cast<std::size_t>(i)];
      const double onehot = i == rule_index ? 1.0 : 0.0;
      dlogits[static_cast<std::size_t>(i)] += coef * (onehot - p);
    }
    for (int i = 0; i < net.config.flip_actions; ++i) {
      const double p = cache.flip_probs[static_cast<std::size_t>(i)];
      const double onehot = i == flip_index ? 1.0 : 0.0;
      dlogits[static_cast<std::size_t>(net.config.rule_actions + i)] +=
          coef * (onehot - p);
    }
  }
  for (int i = 0; i < net.config.rule_actions; ++i) {
    const double p = cache.rule_probs[static_cast<std::size_t>(i)];
    dlogits[static_cast<std::size_t>(i)] +=
        entropy_coef * p * (std::log(std::max(p, 1e-300)) + h_rule) * inv;
  }
  for (int i = 0; i < net.config.flip_actions; ++i) {
    const double p = cache.flip_probs[static_cast<std::size_t>(i)];
    dlogits[static_cast<std::size_t>(net.config.rule_actions + i)] +=
        entropy_coef * p * (std::log(std::max(p, 1e-300)) + h_flip) * inv;
  }
  backward(net, cache, dlogits, dvalue, grads);
}

}  // namespace

namespace ppo_detail {

LossBreakdown loss_and_gradients(const PolicyNet& net,
                                 const std::vector<LossSample>& samples,
                                 double clip_ratio, double value_coef,
                                 double entropy_coef,
                                 std::vector<double>* flat_grads) {
  if (samples.empty()) throw std::invalid_argument("empty loss batch");
  GradBuffer grads(net);
  SampleStats stats;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (const LossSample& s : samples) {
    accumulate_sample(net, s.observation, s.rule_index, s.flip_index,
                      s.old_log_prob, s.advantage, s.value_target, clip_ratio,
                      value_coef, entropy_coef, inv, grads, stats);
  }
  LossBreakdown out;
  out.policy = stats.policy * inv;
  out.value = stats.value * inv;
  out.entropy = stats.entropy * inv;
  out.total = out.policy + value_coef * out.value - entropy_coef * out.entropy;
  if (flat_grads != nullptr) {
    flat_grads->clear();
    for (std::size_t li = 0; li < grads.weights.size(); ++li) {
      flat_grads->insert(flat_grads->end(), grads.weights[li].begin(),
                         grads.weights[li].end());
      flat_grads->insert(flat_grads->end(), grads.bias[li].begin(),
                         grads.bias[li].end());
    }
  }
  return out;
}

}  // namespace ppo_detail

TrainResult ppo_train(const ProblemInstance& inst, const Genome& sample,
                      double fitness_label, const ScheduleMetrics& baseline,
                      const TrainerConfig& config,
                      const std::function<void(const UpdateLog&)>& on_update) {
  TrainResult result;
  result.agent = make_agent(config.net, mix_seed(config.seed, 0x11));
  Agent& agent = result.agent;

  AdamState adam(agent.net);
  Rng shuffle_rng(mix_seed(config.seed, 0x5e0f));

  int update_index = 0;
  long episode_counter = 0;

  SimOptions rollout_options;
  rollout_options.lamarckian_writeback = false;

  while (result.steps_done < config.total_steps) {
    // --- rollout: a fixed number of full episodes ---------------------------
    std::vector<std::vector<Transition>> episodes;
    double reward_sum = 0.0;
    for (int e = 0; e < config.update_episodes; ++e) {
      AgentHandler handler(agent, ActMode::Sample,
                           mix_seed(config.seed, 0xe0000000ULL +
                                                     static_cast<std::uint64_t>(
                                                         episode_counter)));
      ++episode_counter;
      const SimResult sim =
          simulate(inst, sample, &handler, rollout_options);
      ++result.episodes_done;
      const auto& steps = handler.steps();
      if (steps.empty()) continue;
      const double achieved = scalarize(sim.metrics, baseline,
                                        inst.weight_makespan, inst.weight_tardiness);

      std::vector<Transition> episode;
      episode.reserve(steps.size());
      const int n = static_cast<int>(steps.size());
      for (int i = 0; i < n; ++i) {
        const AgentHandler::Step& step = steps[static_cast<std::size_t>(i)];
        const FeatureVector& next =
            i + 1 < n ? steps[static_cast<std::size_t>(i + 1)].raw
                      : *handler.terminal_features();
        Transition tr;
        tr.observation = step.observation;
        tr.raw_features = step.raw;
        tr.rule_index = step.action.rule_index;
        tr.flip_index = step.action.flip_index;
        tr.log_prob = step.action.log_prob_rule + step.action.log_prob_flip;
        tr.value = step.action.value;
        tr.reward = intermediate_reward(step.raw, next, tr.rule_index,
                                        tr.flip_index, config.throughput_bonus);
        tr.episode_end = i == n - 1;
        episode.push_back(std::move(tr));
      }
      episode.back().reward += final_reward(fitness_label, achieved, n);
      for (const Transition& tr : episode) reward_sum += tr.reward;
      result.steps_done += n;
      episodes.push_back(std::move(episode));
      handler.update_norm_stats(agent.norm);
    }
    if (episodes.empty()) break;  // degenerate instance: nothing to learn from

    // --- generalized advantage estimation, flattened batch ------------------
    std::vector<Transition> batch;
    std::vector<double> advantages;
    std::vector<double> returns;
    for (std::vector<Transition>& episode : episodes) {
      double next_adv = 0.0;
      const int n = static_cast<int>(episode.size());
      std::vector<double> adv(static_cast<std::size_t>(n), 0.0);
      for (int i = n - 1; i >= 0; --i) {
        const double next_value =
            i + 1 < n ? episode[static_cast<std::size_t>(i + 1)].value : 0.0;
        const double delta = episode[static_cast<std::size_t>(i)].reward +
                             config.discount * next_value -
                             episode[static_cast<std::size_t>(i)].value;
        next_adv = delta + config.discount * config.gae_lambda * next_adv;
        adv[static_cast<std::size_t>(i)] = next_adv;
      }
      for (int i = 0; i < n; ++i) {
        advantages.push_back(adv[static_cast<std::size_t>(i)]);
        returns.push_back(adv[static_cast<std::size_t>(i)] +
                          episode[static_cast<std::size_t>(i)].value);
        batch.push_back(std::move(episode[static_cast<std::size_t>(i)]));
      }
    }

    const double progress =
        std::min(1.0, static_cast<double>(result.steps_done) /
                          static_cast<double>(config.total_steps));
    const double lr = config.learning_rate * (1.0 - progress);

    // --- clipped-surrogate updates over shuffled minibatches ----------------
    GradBuffer grads(agent.net);
    double policy_loss_sum = 0.0, value_loss_sum = 0.0, entropy_sum = 0.0;
    int minibatch_count = 0;

    std::vector<int> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      shuffle_rng.shuffle(order);
      for (std::size_t begin = 0; begin < order.size();
           begin += static_cast<std::size_t>(config.minibatch_size)) {
        const std::size_t end =
            std::min(order.size(),
                     begin + static_cast<std::size_t>(config.minibatch_size));
        const int count = static_cast<int>(end - begin);

        double adv_mean = 0.0, adv_sq = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
          adv_mean += advantages[static_cast<std::size_t>(order[k])];
        }
        adv_mean /= count;
        for (std::size_t k = begin; k < end; ++k) {
          const double d = advantages[static_cast<std::size_t>(order[k])] - adv_mean;
          adv_sq += d * d;
        }
        const double adv_std = std::sqrt(adv_sq / count) + 1e-8;

        grads.zero();
        SampleStats stats;
        for (std::size_t k = begin; k < end; ++k) {
          const int idx = order[k];
          const Transition& tr = batch[static_cast<std::size_t>(idx)];
          const double adv =
              (advantages[static_cast<std::size_t>(idx)] - adv_mean) / adv_std;
          accumulate_sample(agent.net, tr.observation, tr.rule_index,
                            tr.flip_index, tr.log_prob, adv,
                            returns[static_cast<std::size_t>(idx)],
                            config.clip_ratio, config.value_coef,
                            config.entropy_coef, 1.0 / count, grads, stats);
        }

        const double policy_loss = stats.policy / count;
        const double value_loss = stats.value / count;
        const double entropy = stats.entropy / count;
        if (!std::isfinite(policy_loss) || !std::isfinite(value_loss) ||
            !std::isfinite(entropy)) {
          throw TrainingDiverged(update_index, "non-finite loss during update " +
                                                   std::to_string(update_index));
        }
        policy_loss_sum += policy_loss;
        value_loss_sum += value_loss;
        entropy_sum += entropy;
        ++minibatch_count;

        adam_step(agent.net, grads, adam, lr, config.max_grad_norm);
      }
    }
    if (!net_finite(agent.net)) {
      throw TrainingDiverged(update_index, "non-finite parameter after update " +
                                               std::to_string(update_index));
    }

    UpdateLog log;
    log.update = update_index++;
    log.steps_done = result.steps_done;
    log.learning_rate = lr;
    log.policy_loss = policy_loss_sum / minibatch_count;
    log.value_loss = value_loss_sum / minibatch_count;
    log.entropy = entropy_sum / minibatch_count;
    log.mean_episode_reward = reward_sum / static_cast<double>(episodes.size());
    result.updates.push_back(log);
    if (on_update) on_update(log);
  }
  return result;
}

}  // namespace shopsched
