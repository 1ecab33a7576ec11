#pragma once

#include "umri/mri/types.hpp"

// Multi-coil Cartesian acquisition model: centered orthonormal Fourier
// operators, equispaced undersampling, coil expand/reduce and RSS combination.
// Pure functions; safe to call concurrently.
namespace umri::mri {

// Centered orthonormal 2D DFT (zero frequency at the array center,
// norm-preserving). Rejects non-finite input.
template <typename T>
ComplexImageT<T> fft2c(const ComplexImageT<T>& image);

template <typename T>
ComplexImageT<T> ifft2c(const ComplexImageT<T>& kspace);

// Fully sampled centered ACS block plus every acceleration-th column
// (j ≡ 0 mod R) outside it.
SamplingMask make_equispaced_mask(int width, int acceleration, const AcsSpec& acs);

template <typename T>
MultiCoilKSpaceT<T> apply_mask(const MultiCoilKSpaceT<T>& kspace, const SamplingMask& mask);

// coil_i = S_i * x
template <typename T>
CoilImagesT<T> expand(const ComplexImageT<T>& image, const SensitivityMapsT<T>& sens);

// sum_i conj(S_i) * x_i
template <typename T>
ComplexImageT<T> reduce(const CoilImagesT<T>& coil_images, const SensitivityMapsT<T>& sens);

// A(x) = M F E(x), applied per coil
template <typename T>
MultiCoilKSpaceT<T> forward_operator(const ComplexImageT<T>& image,
                                     const SensitivityMapsT<T>& sens, const SamplingMask& mask);

// A^H(y) = E^H F^-1 M y; the adjoint of forward_operator
template <typename T>
ComplexImageT<T> adjoint_operator(const MultiCoilKSpaceT<T>& kspace,
                                  const SensitivityMapsT<T>& sens, const SamplingMask& mask);

// pixelwise sqrt(sum_i |x_i|^2)
template <typename T>
std::vector<T> rss(const CoilImagesT<T>& coil_images);

// zero-filled reconstruction: RSS of per-coil inverse transforms
template <typename T>
std::vector<T> zero_filled_rss(const MultiCoilKSpaceT<T>& kspace);

template <typename T>
void check_finite(const ComplexImageT<T>& image, const char* where);

}  // namespace umri::mri
