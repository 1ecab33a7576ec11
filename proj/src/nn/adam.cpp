#include "umri/nn/adam.hpp"

#include <cmath>

namespace umri {

namespace {
const std::string kStepPath = std::string(kStatePrefix) + "adam_step";
std::string moment_path(const char* which, const std::string& param) {
  return std::string(kStatePrefix) + "adam_" + which + "/" + param;
}
}  // namespace

template <typename T>
long adam_step_count(const ModelWeights<T>& weights) {
  if (!weights.has(kStepPath)) return 0;
  return static_cast<long>(weights.get(kStepPath).value()[0]);
}

template <typename T>
void adam_step(ModelWeights<T>& weights, const NamedGrads<T>& grads, const AdamConfig& cfg) {
  if (!weights.has(kStepPath)) weights.add(kStepPath, {1}, {T(0)}, true);
  Tensor<T>& step_t = weights.get(kStepPath);
  const long step = static_cast<long>(step_t.value()[0]) + 1;
  step_t.value_mut()[0] = static_cast<T>(step);

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));

  for (auto& [path, entry] : weights.entries()) {
    if (entry.frozen || is_state_path(path)) continue;
    auto git = grads.find(path);
    if (git == grads.end()) continue;
    const std::vector<T>& g = git->second;
    if (g.size() != entry.tensor.numel())
      throw ShapeError("adam: gradient size mismatch for " + path);

    const std::string mp = moment_path("m", path);
    const std::string vp = moment_path("v", path);
    if (!weights.has(mp)) {
      weights.add(mp, entry.tensor.shape(), std::vector<T>(g.size(), T(0)), true);
      weights.add(vp, entry.tensor.shape(), std::vector<T>(g.size(), T(0)), true);
    }
    std::vector<T>& m = weights.get(mp).value_mut();
    std::vector<T>& v = weights.get(vp).value_mut();
    std::vector<T>& p = entry.tensor.value_mut();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

template long adam_step_count<float>(const ModelWeights<float>&);
template long adam_step_count<double>(const ModelWeights<double>&);
template void adam_step<float>(ModelWeights<float>&, const NamedGrads<float>&, const AdamConfig&);
template void adam_step<double>(ModelWeights<double>&, const NamedGrads<double>&, const AdamConfig&);

}  // namespace umri
