#pragma once

#include <functional>

#include "umri/recon/denoiser.hpp"
#include "umri/recon/sme.hpp"

namespace umri::recon {

// Image-domain refinement plugged into a cascade; maps (2,H,W) -> (2,H,W).
template <typename T>
using DenoiserFn = std::function<Tensor<T>(const Tensor<T>&)>;

// G(k) = F E( D( R( F^-1 k ) ) ): per-coil inverse transform, coil reduction,
// denoise, coil expansion, forward transform.
template <typename T>
Tensor<T> regularizer_g(const Tensor<T>& kspace, const Tensor<T>& sens,
                        const DenoiserFn<T>& denoiser);

// k_{t+1} = k_t - mu * M (k_t - k~) + G(k_t)
template <typename T>
Tensor<T> cascade_step(const Tensor<T>& k_t, const Tensor<T>& k_tilde, const SamplingMask& mask,
                       const Tensor<T>& mu, const Tensor<T>& sens, const DenoiserFn<T>& denoiser);

enum class Variant { VitFusion, BaselineCnn };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::VitFusion;
  int cascades = 4;
  bool shared_denoiser = true;
  DenoiserConfig denoiser;      // vit-fusion variant
  CnnDenoiserConfig cnn;        // baseline variant
  SmeConfig sme;

  void validate() const;
};

// The unrolled reconstructor: SME + T cascades + RSS output. Owns the weight
// container; forward passes build a fresh graph over the shared parameter
// tensors, so read-only inference is thread-safe.
template <typename T>
struct ReconModel {
  ModelConfig cfg;
  ModelWeights<T> weights;

  void init(std::uint64_t seed);

  // prefix of the denoiser parameter set used at cascade t
  std::string denoiser_prefix(int t) const;
  DenoiserFn<T> denoiser_for_cascade(int t) const;

  Tensor<T> sensitivities(const Tensor<T>& masked_kspace, const SamplingMask& mask) const;

  // masked k-space (N,2,H,W) -> magnitude image (H,W)
  Tensor<T> reconstruct_graph(const Tensor<T>& masked_kspace, const SamplingMask& mask) const;

  // value-level convenience around reconstruct_graph
  std::vector<T> reconstruct(const MultiCoilKSpaceT<T>& masked_kspace,
                             const SamplingMask& mask) const;
};

// (N,H,W) complex array <-> (N,2,H,W) planar tensor
template <typename T>
Tensor<T> kspace_to_tensor(const MultiCoilKSpaceT<T>& k);
template <typename T>
MultiCoilKSpaceT<T> tensor_to_kspace(const Tensor<T>& t);

}  // namespace umri::recon
