#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "shopsched/agent.hpp"

namespace shopsched {

namespace {

// Training math runs in double, but every stored parameter sits on the
// float32 grid so checkpoints round-trip bit-exactly.
double pin(double x) { return static_cast<double>(static_cast<float>(x)); }

double leaky_relu(double x) { return x >= 0.0 ? x : 0.01 * x; }

std::vector<double> dense(const DenseLayer& layer, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(layer.out));
  for (int r = 0; r < layer.out; ++r) {
    double acc = layer.bias[static_cast<std::size_t>(r)];
    const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
    for (int c = 0; c < layer.in; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
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

DenseLayer make_layer(int in, int out, double scale, Rng& rng) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.weights.resize(static_cast<std::size_t>(in) * out);
  layer.bias.assign(static_cast<std::size_t>(out), 0.0);
  const double stddev = scale / std::sqrt(static_cast<double>(in));
  for (double& w : layer.weights) w = pin(stddev * rng.standard_normal());
  return layer;
}

int pick_sample(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform_real(0.0, 1.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int pick_greedy(const std::vector<double>& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

std::vector<DenseLayer*> PolicyNet::layers() {
  return {&trunk, &value1, &value2, &value_out, &policy_hidden, &policy_out};
}

std::vector<const DenseLayer*> PolicyNet::layers() const {
  return {&trunk, &value1, &value2, &value_out, &policy_hidden, &policy_out};
}

std::size_t PolicyNet::parameter_count() const {
  std::size_t count = 0;
  for (const DenseLayer* layer : layers()) {
    count += layer->weights.size() + layer->bias.size();
  }
  return count;
}

PolicyNet make_policy_net(const NetConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  PolicyNet net;
  net.config = config;
  // He-style normal fan-in init for the hidden stack; near-zero policy head so
  // initial action distributions stay close to uniform.
  const double gain = std::sqrt(2.0);
  net.trunk = make_layer(config.input_dim, config.trunk_dim, gain, rng);
  net.value1 = make_layer(config.trunk_dim, config.value_hidden1, gain, rng);
  net.value2 = make_layer(config.value_hidden1, config.value_hidden2, gain, rng);
  net.value_out = make_layer(config.value_hidden2, 1, 1.0, rng);
  net.policy_hidden = make_layer(config.trunk_dim, config.policy_hidden, gain, rng);
  net.policy_out = make_layer(config.policy_hidden,
                              config.rule_actions + config.flip_actions, 0.01, rng);
  return net;
}

NetOutput net_forward(const PolicyNet& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.config.input_dim) {
    throw std::invalid_argument("feature vector has the wrong dimension");
  }
  std::vector<double> trunk = dense(net.trunk, input);
  for (double& v : trunk) v = leaky_relu(v);

  std::vector<double> v1 = dense(net.value1, trunk);
  for (double& v : v1) v = leaky_relu(v);
  std::vector<double> v2 = dense(net.value2, v1);
  for (double& v : v2) v = leaky_relu(v);
  const std::vector<double> value = dense(net.value_out, v2);

  std::vector<double> ph = dense(net.policy_hidden, trunk);
  for (double& v : ph) v = leaky_relu(v);
  std::vector<double> logits = dense(net.policy_out, ph);

  NetOutput out;
  out.value = value[0];
  const auto split = logits.begin() + net.config.rule_actions;
  out.rule_logits.assign(logits.begin(), split);
  out.flip_logits.assign(split, logits.end());
  out.rule_probs = softmax(out.rule_logits);
  out.flip_probs = softmax(out.flip_logits);
  return out;
}

void RunningNorm::update(std::span<const double> x) {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("normalizer dimension mismatch");
  }
  const double total = count + 1.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double delta = x[i] - mean[i];
    const double new_mean = mean[i] + delta / total;
    // Batch-merge form of Welford's update with a batch of one observation.
    const double m2 = var[i] * count + delta * delta * count / total;
    mean[i] = new_mean;
    var[i] = m2 / total;
  }
  count = total;
}

std::vector<double> RunningNorm::normalize(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("normalizer dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) / std::sqrt(var[i] + 1e-8);
    out[i] = std::clamp(z, -10.0, 10.0);
  }
  return out;
}

Agent make_agent(const NetConfig& config, std::uint64_t seed) {
  return Agent{make_policy_net(config, seed), RunningNorm(config.input_dim)};
}

ActResult act(const Agent& agent, std::span<const double> features, ActMode mode,
              Rng* rng) {
  if (static_cast<int>(features.size()) != agent.net.config.input_dim) {
    throw std::invalid_argument("feature vector has the wrong dimension");
  }
  for (double v : features) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite feature value");
    }
  }
  const std::vector<double> observation = agent.norm.normalize(features);
  const NetOutput out = net_forward(agent.net, observation);

  ActResult result;
  if (mode == ActMode::Sample) {
    if (rng == nullptr) {
      throw std::invalid_argument("sampling mode needs a random stream");
    }
    result.rule_index = pick_sample(out.rule_probs, *rng);
    result.flip_index = pick_sample(out.flip_probs, *rng);
  } else {
    result.rule_index = pick_greedy(out.rule_probs);
    result.flip_index = pick_greedy(out.flip_probs);
  }
  result.log_prob_rule =
      std::log(out.rule_probs[static_cast<std::size_t>(result.rule_index)]);
  result.log_prob_flip =
      std::log(out.flip_probs[static_cast<std::size_t>(result.flip_index)]);
  result.value = out.value;
  return result;
}

double intermediate_reward(const FeatureVector& last, const FeatureVector& current,
                           int rule_index, int flip_index,
                           ThroughputBonusMode mode) {
  double reward = 0.0;
  const auto flip = static_cast<FlipAction>(flip_index);

  // Flip appraisal: exactly one branch fires.
  if (flip == FlipAction::Station && last[kFeatCompeting] <= 0.0) {
    reward -= 3.0;
  } else if (flip == FlipAction::Station &&
             last[kFeatRelStationWip] > last[kFeatMeanStationWip]) {
    reward += 2.0;
  } else if (flip == FlipAction::Worker && last[kFeatSlots] > 0.0 &&
             last[kFeatRelWorkerWip] / last[kFeatSlots] > 1.0) {
    reward += 1.0;
  }

  // Slack-aware rule pick: the station's jobs run tighter than the global mix.
  if (kAgentRules[static_cast<std::size_t>(rule_index)] == DispatchRule::Str &&
      last[kFeatMeanSlack] < last[kFeatGlobalMeanSlack]) {
    reward += 1.0;
  }

  const bool throughput_bonus =
      mode == ThroughputBonusMode::StrictImprovement
          ? current[kFeatMeanThroughput] > last[kFeatMeanThroughput]
          : last[kFeatMeanThroughput] == 0.0 && current[kFeatMeanThroughput] > 0.0;
  if (throughput_bonus) reward += 3.0;

  if (current[kFeatMinSlack] > 0.0) reward += 3.0;
  return reward;
}

double final_reward(double fitness_label, double fitness_achieved, int steps) {
  const double n = static_cast<double>(steps);
  return (fitness_label - fitness_achieved) * 20.0 * n * n;
}

// --- persistence -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(out, bits);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > bytes.size()) {
      throw std::invalid_argument("policy checkpoint truncated");
    }
    std::uint32_t v = bytes[pos] | (bytes[pos + 1] << 8) |
                      (bytes[pos + 2] << 16) |
                      (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }

  double f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return static_cast<double>(f);
  }
};

// Blob order: per layer weights then bias, then normalizer mean, var, count.
std::vector<std::pair<std::uint32_t, std::uint32_t>> blob_shapes(const Agent& agent) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
  for (const DenseLayer* layer : agent.net.layers()) {
    shapes.push_back({static_cast<std::uint32_t>(layer->out),
                      static_cast<std::uint32_t>(layer->in)});
    shapes.push_back({1, static_cast<std::uint32_t>(layer->out)});
  }
  const auto dim = static_cast<std::uint32_t>(agent.norm.mean.size());
  shapes.push_back({1, dim});
  shapes.push_back({1, dim});
  shapes.push_back({1, 1});
  return shapes;
}

}  // namespace

std::vector<std::uint8_t> save_policy(const Agent& agent) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  const NetConfig& c = agent.net.config;
  for (int v : {c.input_dim, c.trunk_dim, c.value_hidden1, c.value_hidden2,
                c.policy_hidden, c.rule_actions, c.flip_actions}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  const auto shapes = blob_shapes(agent);
  put_u32(out, static_cast<std::uint32_t>(shapes.size()));
  for (const auto& [rows, cols] : shapes) {
    put_u32(out, rows);
    put_u32(out, cols);
  }
  for (const DenseLayer* layer : agent.net.layers()) {
    for (double w : layer->weights) put_f32(out, w);
    for (double b : layer->bias) put_f32(out, b);
  }
  for (double m : agent.norm.mean) put_f32(out, m);
  for (double v : agent.norm.var) put_f32(out, v);
  put_f32(out, agent.norm.count);
  return out;
}

Agent load_policy(std::span<const std::uint8_t> bytes) {
  Reader reader{bytes};
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::invalid_argument("not a policy checkpoint (bad magic)");
  }
  reader.pos = 4;
  if (reader.u32() != kVersion) {
    throw std::invalid_argument("unsupported policy checkpoint version");
  }
  NetConfig config;
  config.input_dim = static_cast<int>(reader.u32());
  config.trunk_dim = static_cast<int>(reader.u32());
  config.value_hidden1 = static_cast<int>(reader.u32());
  config.value_hidden2 = static_cast<int>(reader.u32());
  config.policy_hidden = static_cast<int>(reader.u32());
  config.rule_actions = static_cast<int>(reader.u32());
  config.flip_actions = static_cast<int>(reader.u32());

  Agent agent = make_agent(config, 0);
  const auto expected = blob_shapes(agent);
  const std::uint32_t blob_count = reader.u32();
  if (blob_count != expected.size()) {
    throw std::invalid_argument("policy checkpoint shape table mismatch");
  }
  for (const auto& [rows, cols] : expected) {
    if (reader.u32() != rows || reader.u32() != cols) {
      throw std::invalid_argument("policy checkpoint shape table mismatch");
    }
  }
  for (DenseLayer* layer : agent.net.layers()) {
    for (double& w : layer->weights) w = reader.f32();
    for (double& b : layer->bias) b = reader.f32();
  }
  for (double& m : agent.norm.mean) m = reader.f32();
  for (double& v : agent.norm.var) v = reader.f32();
  agent.norm.count = reader.f32();
  if (reader.pos != bytes.size()) {
    throw std::invalid_argument("policy checkpoint has trailing bytes");
  }
  return agent;
}

// --- handler ------------------------------------------------------------------

AgentHandler::AgentHandler(const Agent& agent, ActMode mode, std::uint64_t seed)
    : agent_(agent), mode_(mode), rng_(seed) {}

Decision AgentHandler::decide(const DecisionPoint& pending) {
  Step step;
  step.raw = pending.features;
  step.observation = agent_.norm.normalize(pending.features);
  step.action = act(agent_, pending.features, mode_, &rng_);
  steps_.push_back(step);
  return Decision{kAgentRules[static_cast<std::size_t>(step.action.rule_index)],
                  static_cast<FlipAction>(step.action.flip_index)};
}

void AgentHandler::episode_end(const FeatureVector& features) {
  terminal_ = features;
}

void AgentHandler::update_norm_stats(RunningNorm& norm) const {
  for (const Step& step : steps_) {
    norm.update(std::span<const double>(step.raw.data(), step.raw.size()));
  }
}

}  // namespace shopsched
