#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "umri/nn/unet.hpp"
#include "umri/nn/vit.hpp"

namespace umri::recon {

// Image-domain denoiser driven by frozen encoder features: percentile
// preprocessing, six-layer fusion with softmax weights, and a hierarchical
// decoder with encoder skips plus an input-level complex skip.
struct DenoiserConfig {
  VitConfig encoder;
  int working_size = 64;  // decoder output resolution; equals encoder input
  std::array<int, 3> skip_layers{5, 4, 3};  // 1-based indices into the fused six
  std::vector<int> decoder_channels{48, 32, 16};
  double p_lo = 1.0;   // percentile bounds for magnitude scaling
  double p_hi = 99.0;
  std::array<double, 3> norm_mean{0.485, 0.456, 0.406};
  std::array<double, 3> norm_std{0.229, 0.224, 0.225};
  int input_skip_channels = 8;
  bool residual_output = false;  // add the input estimate back onto the output

  static constexpr int kFusedLayers = 6;

  void validate() const;
  int stages() const;  // log2(patch_size), forced by patch geometry

  // decoder channel plan per preset
  static DenoiserConfig desk();
  static DenoiserConfig for_encoder(const VitConfig& enc);
};

template <typename T>
void init_denoiser_weights(ModelWeights<T>& weights, const DenoiserConfig& cfg,
                           const std::string& prefix, std::uint64_t seed);

// magnitude -> percentile clip/rescale -> 3 channels -> resize -> standardize
template <typename T>
Tensor<T> preprocess(const Tensor<T>& image_2hw, const DenoiserConfig& cfg);

// LayerNorm each of the six token sets, combine with softmax weights, reshape
// patch tokens to (1, embed, grid, grid)
template <typename T>
Tensor<T> fuse_layers(const std::vector<Tensor<T>>& layer_tokens, const ModelWeights<T>& weights,
                      const std::string& prefix, const VitConfig& enc);

// hierarchical decoder; skips are raw token tensors from encoder layers
// skip_layers[0..2]; input_2hw feeds the final-stage complex skip
template <typename T>
Tensor<T> decode(const Tensor<T>& fused, const std::array<Tensor<T>, 3>& skips,
                 const Tensor<T>& input_2hw, const ModelWeights<T>& weights,
                 const std::string& prefix, const DenoiserConfig& cfg);

// full pipeline: preprocess -> encode -> fuse -> decode; output matches the
// input (2,H,W) shape
template <typename T>
Tensor<T> denoise(const Tensor<T>& image_2hw, const ModelWeights<T>& weights,
                  const std::string& encoder_prefix, const std::string& prefix,
                  const DenoiserConfig& cfg);

// Baseline convolutional denoiser: per-channel normalization wrapped around a
// small U-Net, the conventional unrolled-reconstruction regularizer.
struct CnnDenoiserConfig {
  UnetConfig unet{2, 2, 16, 3};
  double eps = 1e-6;

  void validate() const { unet.validate(); }
};

template <typename T>
void init_cnn_denoiser_weights(ModelWeights<T>& weights, const CnnDenoiserConfig& cfg,
                               const std::string& prefix, std::uint64_t seed);

template <typename T>
Tensor<T> cnn_denoise(const Tensor<T>& image_2hw, const ModelWeights<T>& weights,
                      const std::string& prefix, const CnnDenoiserConfig& cfg);

}  // namespace umri::recon
