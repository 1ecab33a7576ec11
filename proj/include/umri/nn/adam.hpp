#pragma once

#include "umri/nn/weights.hpp"

namespace umri {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update over all non-frozen parameters that appear in `grads`.
// Moment vectors and the step counter live in the weight container under the
// __state__/ prefix, so checkpoints capture the optimizer state.
template <typename T>
void adam_step(ModelWeights<T>& weights, const NamedGrads<T>& grads, const AdamConfig& cfg);

// current step counter (0 before any update)
template <typename T>
long adam_step_count(const ModelWeights<T>& weights);

}  // namespace umri
