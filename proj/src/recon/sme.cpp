#include "umri/recon/sme.hpp"

#include "umri/nn/ops.hpp"

namespace umri::recon {

template <typename T>
void init_sme_weights(ModelWeights<T>& weights, const SmeConfig& cfg, const std::string& prefix,
                      std::uint64_t seed) {
  cfg.validate();
  init_unet_weights(weights, cfg.unet(), prefix + "/unet", seed);
}

template <typename T>
Tensor<T> estimate_sensitivities(const Tensor<T>& masked_kspace, const SamplingMask& mask,
                                 const ModelWeights<T>& weights, const SmeConfig& cfg,
                                 const std::string& prefix) {
  cfg.validate();
  if (masked_kspace.rank() != 4 || masked_kspace.dim(1) != 2)
    throw ShapeError("sme: expected (N,2,H,W) k-space tensor");
  if (masked_kspace.dim(3) != mask.width) throw ShapeError("sme: mask width mismatch");
  if (mask.acs_width < 1) throw ConfigError("sme: mask has an empty ACS block");

  // low-frequency calibration region only
  std::vector<std::uint8_t> acs_cols(static_cast<std::size_t>(mask.width), 0);
  for (int c = mask.acs_start; c < mask.acs_start + mask.acs_width; ++c) acs_cols[c] = 1;

  Tensor<T> acs_imgs = ops::ifft2c(ops::mask_cols(masked_kspace, acs_cols));
  Tensor<T> refined = ops::add(acs_imgs, unet_forward(weights, cfg.unet(), prefix + "/unet", acs_imgs));
  return ops::normalize_rss(refined, kSensSupportEps);
}

#define UMRI_INSTANTIATE_SME(T)                                                                 \
  template void init_sme_weights<T>(ModelWeights<T>&, const SmeConfig&, const std::string&,     \
                                    std::uint64_t);                                             \
  template Tensor<T> estimate_sensitivities<T>(const Tensor<T>&, const SamplingMask&,           \
                                               const ModelWeights<T>&, const SmeConfig&,        \
                                               const std::string&);

UMRI_INSTANTIATE_SME(float)
UMRI_INSTANTIATE_SME(double)

#undef UMRI_INSTANTIATE_SME

}  // namespace umri::recon
