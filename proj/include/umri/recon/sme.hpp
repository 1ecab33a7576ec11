#pragma once

#include <cstdint>
#include <string>

#include "umri/mri/types.hpp"
#include "umri/nn/unet.hpp"

namespace umri::recon {

// Sensitivity map estimation: per-coil inverse transform of the ACS-only
// k-space, residual U-Net refinement over stacked real/imag channels with
// coils in the batch dimension, then pixelwise RSS normalization.
struct SmeConfig {
  int pooling_layers = 4;
  int base_channels = 8;

  void validate() const {
    if (pooling_layers < 1) throw ConfigError("sme: pooling_layers must be at least 1");
    if (base_channels < 1) throw ConfigError("sme: base_channels must be at least 1");
  }
  UnetConfig unet() const { return UnetConfig{2, 2, base_channels, pooling_layers}; }
};

inline constexpr double kSensSupportEps = 1e-8;

template <typename T>
void init_sme_weights(ModelWeights<T>& weights, const SmeConfig& cfg, const std::string& prefix,
                      std::uint64_t seed);

// masked_kspace: (N,2,H,W). The ACS block must be nonempty.
template <typename T>
Tensor<T> estimate_sensitivities(const Tensor<T>& masked_kspace, const SamplingMask& mask,
                                 const ModelWeights<T>& weights, const SmeConfig& cfg,
                                 const std::string& prefix);

}  // namespace umri::recon
