#pragma once

#include <map>
#include <string>

#include "umri/nn/tensor.hpp"

namespace umri {

// Reserved path prefix for optimizer/training state stored alongside the
// parameters, so a checkpoint restores mid-run training exactly.
inline constexpr const char* kStatePrefix = "__state__/";

inline bool is_state_path(const std::string& path) {
  return path.rfind(kStatePrefix, 0) == 0;
}

// Named parameter container. Paths are unique, iteration is sorted, and a
// frozen entry's tensor never requires grad, so the graph never produces a
// gradient for it and the optimizer never touches it.
template <typename T>
class ModelWeights {
 public:
  struct Entry {
    Tensor<T> tensor;
    bool frozen = false;
  };

  Tensor<T>& add(const std::string& path, Shape shape, std::vector<T> data, bool frozen) {
    if (map_.count(path)) throw ConfigError("weights: duplicate path " + path);
    Tensor<T> t = frozen ? Tensor<T>::constant(std::move(shape), std::move(data))
                         : Tensor<T>::param(std::move(shape), std::move(data));
    auto [it, ok] = map_.emplace(path, Entry{std::move(t), frozen});
    (void)ok;
    return it->second.tensor;
  }

  bool has(const std::string& path) const { return map_.count(path) != 0; }

  const Tensor<T>& get(const std::string& path) const {
    auto it = map_.find(path);
    if (it == map_.end()) throw ConfigError("weights: missing path " + path);
    return it->second.tensor;
  }

  Tensor<T>& get(const std::string& path) {
    auto it = map_.find(path);
    if (it == map_.end()) throw ConfigError("weights: missing path " + path);
    return it->second.tensor;
  }

  bool frozen(const std::string& path) const {
    auto it = map_.find(path);
    if (it == map_.end()) throw ConfigError("weights: missing path " + path);
    return it->second.frozen;
  }

  void remove(const std::string& path) { map_.erase(path); }

  std::map<std::string, Entry>& entries() { return map_; }
  const std::map<std::string, Entry>& entries() const { return map_; }

  std::size_t size() const { return map_.size(); }

  // trainable parameter count, excluding reserved state entries
  std::size_t trainable_scalars() const {
    std::size_t n = 0;
    for (const auto& [path, e] : map_)
      if (!e.frozen && !is_state_path(path)) n += e.tensor.numel();
    return n;
  }

 private:
  std::map<std::string, Entry> map_;
};

// Gradients keyed by parameter path; produced from a backward() GradMap.
template <typename T>
using NamedGrads = std::map<std::string, std::vector<T>>;

template <typename T>
NamedGrads<T> name_gradients(const ModelWeights<T>& weights, const GradMap<T>& grads) {
  NamedGrads<T> out;
  for (const auto& [path, entry] : weights.entries()) {
    auto it = grads.find(entry.tensor.node());
    if (it != grads.end()) out.emplace(path, it->second);
  }
  return out;
}

// Binary weight file, magic "UMRIW1": u64 tensor count, then per tensor
// u32 path length + UTF-8 path, u32 rank, u64 dims, u8 frozen, u8 dtype
// (0 = f32, 1 = f64), raw little-endian sample data. Round trips are
// bit-exact when the element type matches; loading converts otherwise.
template <typename T>
void save_weights(const ModelWeights<T>& weights, const std::string& path);

template <typename T>
ModelWeights<T> load_weights(const std::string& path);

}  // namespace umri
