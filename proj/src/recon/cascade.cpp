#include "umri/recon/cascade.hpp"

#include "umri/nn/init.hpp"
#include "umri/nn/ops.hpp"
#include "umri/nn/vit.hpp"

namespace umri::recon {

template <typename T>
Tensor<T> regularizer_g(const Tensor<T>& kspace, const Tensor<T>& sens,
                        const DenoiserFn<T>& denoiser) {
  if (kspace.rank() != 4 || kspace.dim(1) != 2)
    throw ShapeError("regularizer_g: expected (N,2,H,W) k-space");
  if (sens.shape() != kspace.shape())
    throw ShapeError("regularizer_g: sensitivity shape mismatch");
  Tensor<T> coil_imgs = ops::ifft2c(kspace);
  Tensor<T> combined = ops::sum_coils(ops::complex_mul(coil_imgs, sens, false, true));
  Tensor<T> refined = denoiser(combined);
  if (refined.shape() != combined.shape())
    throw ShapeError("regularizer_g: denoiser changed the image shape");
  return ops::fft2c(ops::complex_mul(sens, refined, false, false));
}

template <typename T>
Tensor<T> cascade_step(const Tensor<T>& k_t, const Tensor<T>& k_tilde, const SamplingMask& mask,
                       const Tensor<T>& mu, const Tensor<T>& sens, const DenoiserFn<T>& denoiser) {
  if (k_t.shape() != k_tilde.shape()) throw ShapeError("cascade_step: k-space shape mismatch");
  if (k_t.dim(static_cast<int>(k_t.rank()) - 1) != mask.width)
    throw ShapeError("cascade_step: mask width mismatch");
  Tensor<T> dc = ops::mask_cols(ops::sub(k_t, k_tilde), mask.columns);
  Tensor<T> updated = ops::sub(k_t, ops::mul_scalar(dc, mu));
  return ops::add(updated, regularizer_g(k_t, sens, denoiser));
}

Variant variant_from_string(const std::string& s) {
  if (s == "vit-fusion") return Variant::VitFusion;
  if (s == "baseline-cnn") return Variant::BaselineCnn;
  throw ConfigError("unknown model variant '" + s + "' (expected vit-fusion or baseline-cnn)");
}

std::string variant_to_string(Variant v) {
  return v == Variant::VitFusion ? "vit-fusion" : "baseline-cnn";
}

void ModelConfig::validate() const {
  if (cascades < 1) throw ConfigError("model: cascade count must be at least 1");
  sme.validate();
  if (variant == Variant::VitFusion) {
    denoiser.validate();
  } else {
    cnn.validate();
  }
}

template <typename T>
void ReconModel<T>::init(std::uint64_t seed) {
  cfg.validate();
  init_sme_weights(weights, cfg.sme, "sme", seed);
  const int denoiser_sets = cfg.shared_denoiser ? 1 : cfg.cascades;
  if (cfg.variant == Variant::VitFusion) {
    init_vit_weights(weights, cfg.denoiser.encoder, "encoder", seed);
    for (int i = 0; i < denoiser_sets; ++i)
      init_denoiser_weights(weights, cfg.denoiser, denoiser_prefix(i), seed);
  } else {
    for (int i = 0; i < denoiser_sets; ++i)
      init_cnn_denoiser_weights(weights, cfg.cnn, denoiser_prefix(i), seed);
  }
  for (int t = 0; t < cfg.cascades; ++t)
    weights.add("cascade/mu" + std::to_string(t), {1}, {T(1)}, false);
}

template <typename T>
std::string ReconModel<T>::denoiser_prefix(int t) const {
  const std::string base = cfg.variant == Variant::VitFusion ? "denoiser" : "cnn";
  if (cfg.shared_denoiser) return base;
  return base + std::to_string(t);
}

template <typename T>
DenoiserFn<T> ReconModel<T>::denoiser_for_cascade(int t) const {
  const std::string prefix = denoiser_prefix(t);
  if (cfg.variant == Variant::VitFusion) {
    return [this, prefix](const Tensor<T>& x) {
      return denoise(x, weights, "encoder", prefix, cfg.denoiser);
    };
  }
  return [this, prefix](const Tensor<T>& x) { return cnn_denoise(x, weights, prefix, cfg.cnn); };
}

template <typename T>
Tensor<T> ReconModel<T>::sensitivities(const Tensor<T>& masked_kspace,
                                       const SamplingMask& mask) const {
  return estimate_sensitivities(masked_kspace, mask, weights, cfg.sme, "sme");
}

template <typename T>
Tensor<T> ReconModel<T>::reconstruct_graph(const Tensor<T>& masked_kspace,
                                           const SamplingMask& mask) const {
  Tensor<T> sens = sensitivities(masked_kspace, mask);
  Tensor<T> k = masked_kspace;
  for (int t = 0; t < cfg.cascades; ++t) {
    k = cascade_step(k, masked_kspace, mask, weights.get("cascade/mu" + std::to_string(t)), sens,
                     denoiser_for_cascade(t));
  }
  return ops::rss(ops::ifft2c(k));
}

template <typename T>
std::vector<T> ReconModel<T>::reconstruct(const MultiCoilKSpaceT<T>& masked_kspace,
                                          const SamplingMask& mask) const {
  Tensor<T> k = kspace_to_tensor(masked_kspace);
  return reconstruct_graph(k, mask).value();
}

template <typename T>
Tensor<T> kspace_to_tensor(const MultiCoilKSpaceT<T>& k) {
  const std::size_t plane = static_cast<std::size_t>(k.height) * k.width;
  std::vector<T> v(static_cast<std::size_t>(k.coils) * 2 * plane);
  for (int i = 0; i < k.coils; ++i) {
    const std::complex<T>* c = k.coil(i);
    T* re = v.data() + static_cast<std::size_t>(i) * 2 * plane;
    T* im = re + plane;
    for (std::size_t p = 0; p < plane; ++p) {
      re[p] = c[p].real();
      im[p] = c[p].imag();
    }
  }
  return Tensor<T>::constant({k.coils, 2, k.height, k.width}, std::move(v));
}

template <typename T>
MultiCoilKSpaceT<T> tensor_to_kspace(const Tensor<T>& t) {
  if (t.rank() != 4 || t.dim(1) != 2) throw ShapeError("tensor_to_kspace: expected (N,2,H,W)");
  MultiCoilKSpaceT<T> k(t.dim(0), t.dim(2), t.dim(3));
  const std::size_t plane = static_cast<std::size_t>(k.height) * k.width;
  for (int i = 0; i < k.coils; ++i) {
    const T* re = t.data() + static_cast<std::size_t>(i) * 2 * plane;
    const T* im = re + plane;
    for (std::size_t p = 0; p < plane; ++p) k.coil(i)[p] = {re[p], im[p]};
  }
  return k;
}

#define UMRI_INSTANTIATE_CASCADE(T)                                                            \
  template Tensor<T> regularizer_g<T>(const Tensor<T>&, const Tensor<T>&,                      \
                                      const DenoiserFn<T>&);                                   \
  template Tensor<T> cascade_step<T>(const Tensor<T>&, const Tensor<T>&, const SamplingMask&,  \
                                     const Tensor<T>&, const Tensor<T>&, const DenoiserFn<T>&); \
  template struct ReconModel<T>;                                                               \
  template Tensor<T> kspace_to_tensor<T>(const MultiCoilKSpaceT<T>&);                          \
  template MultiCoilKSpaceT<T> tensor_to_kspace<T>(const Tensor<T>&);

UMRI_INSTANTIATE_CASCADE(float)
UMRI_INSTANTIATE_CASCADE(double)

#undef UMRI_INSTANTIATE_CASCADE

}  // namespace umri::recon
