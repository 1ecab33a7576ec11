#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umri/nn/weights.hpp"

namespace umri {

// Pre-norm ViT encoder configuration. The fusion stage consumes the first six
// block outputs, hence the floor on num_layers.
struct VitConfig {
  int input_size = 64;
  int patch_size = 8;
  int embed_dim = 64;
  int num_layers = 8;
  int num_heads = 4;
  int mlp_ratio = 4;

  void validate() const;
  int patch_grid() const { return input_size / patch_size; }
  int patch_tokens() const { return patch_grid() * patch_grid(); }
  int tokens() const { return patch_tokens() + 1; }  // class token prepended

  static VitConfig desk();   // 64 px, patch 8, 64-dim, 8 layers, 4 heads
  static VitConfig vitb();   // 224 px, patch 16, 768-dim, 12 layers, 12 heads
  static VitConfig preset(const std::string& name);
};

// Registers the encoder tensors under `prefix` (frozen). Values come from a
// seeded truncated normal (std 0.02) unless the paths are already present,
// e.g. populated from a converted pretrained checkpoint.
template <typename T>
void init_vit_weights(ModelWeights<T>& weights, const VitConfig& cfg, const std::string& prefix,
                      std::uint64_t seed);

// Runs the encoder on a (1,3,S,S) tensor and returns the token sequence after
// every block; each entry is (1 + patch_tokens, embed_dim) with the class
// token first. `up_to_layer` truncates the run (0 or > num_layers = all).
template <typename T>
std::vector<Tensor<T>> vit_encode(const ModelWeights<T>& weights, const VitConfig& cfg,
                                  const std::string& prefix, const Tensor<T>& image,
                                  int up_to_layer = 0);

// Drops the class token and reshapes patch tokens to (1, embed, grid, grid).
template <typename T>
Tensor<T> tokens_to_map(const Tensor<T>& tokens, const VitConfig& cfg);

}  // namespace umri
