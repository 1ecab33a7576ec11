#pragma once

#include <cstdint>
#include <string>

#include "umri/nn/weights.hpp"

namespace umri {

// Compact U-Net: double-conv encoder blocks with 2x2 average pooling,
// bilinear upsampling decoder with skip concatenation, 1x1 output head.
// Channel width doubles per pooling level starting from base_channels.
struct UnetConfig {
  int in_channels = 2;
  int out_channels = 2;
  int base_channels = 8;
  int pools = 4;

  void validate() const;
  // input H and W must be divisible by this
  int spatial_multiple() const { return 1 << pools; }
};

template <typename T>
void init_unet_weights(ModelWeights<T>& weights, const UnetConfig& cfg, const std::string& prefix,
                       std::uint64_t seed);

// x: (N, in_channels, H, W) with H, W divisible by 2^pools
template <typename T>
Tensor<T> unet_forward(const ModelWeights<T>& weights, const UnetConfig& cfg,
                       const std::string& prefix, const Tensor<T>& x);

}  // namespace umri
