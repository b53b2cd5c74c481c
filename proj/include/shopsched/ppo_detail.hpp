#pragma once

#include <vector>

#include "shopsched/agent.hpp"

// Training internals exposed for gradient verification: the same code path
// the optimizer uses, callable on a fixed batch so tests can compare analytic
// gradients against central finite differences of the loss.
namespace shopsched::ppo_detail {

struct LossSample {
  std::vector<double> observation;
  int rule_index = 0;
  int flip_index = 0;
  double old_log_prob = 0.0;  // joint rule+flip log-probability when acting
  double advantage = 0.0;     // already normalized
  double value_target = 0.0;
};

struct LossBreakdown {
  double total = 0.0;    // policy + value_coef * value - entropy_coef * entropy
  double policy = 0.0;   // mean clipped-surrogate loss
  double value = 0.0;    // mean squared value error
  double entropy = 0.0;  // mean summed head entropy
};

// Mean minibatch loss and, when `flat_grads` is non-null, its analytic
// parameter gradients flattened in layer order (weights row-major, then bias,
// per PolicyNet::layers()).
LossBreakdown loss_and_gradients(const PolicyNet&,
                                 const std::vector<LossSample>&,
                                 double clip_ratio, double value_coef,
                                 double entropy_coef,
                                 std::vector<double>* flat_grads);

}  // namespace shopsched::ppo_detail
