#include "umri/mri/physics.hpp"

#include <cmath>

#include "umri/core/fft.hpp"

namespace umri::mri {

template <typename T>
void check_finite(const ComplexImageT<T>& image, const char* where) {
  for (const auto& z : image.data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw DataError(std::string(where) + ": non-finite sample in input");
}

namespace {

template <typename T>
void check_image(const ComplexImageT<T>& image, const char* where) {
  if (image.height < 1 || image.width < 1 ||
      image.data.size() != static_cast<std::size_t>(image.height) * image.width)
    throw ShapeError(std::string(where) + ": malformed image");
}

template <typename T>
void check_kspace_like(const MultiCoilKSpaceT<T>& k, const char* where) {
  if (k.coils < 1 || k.height < 1 || k.width < 1 ||
      k.data.size() != static_cast<std::size_t>(k.coils) * k.height * k.width)
    throw ShapeError(std::string(where) + ": malformed multi-coil array");
}

}  // namespace

template <typename T>
ComplexImageT<T> fft2c(const ComplexImageT<T>& image) {
  check_image(image, "fft2c");
  check_finite(image, "fft2c");
  ComplexImageT<T> out(image.height, image.width);
  fft::fft2c(image.data.data(), out.data.data(), image.height, image.width);
  return out;
}

template <typename T>
ComplexImageT<T> ifft2c(const ComplexImageT<T>& kspace) {
  check_image(kspace, "ifft2c");
  check_finite(kspace, "ifft2c");
  ComplexImageT<T> out(kspace.height, kspace.width);
  fft::ifft2c(kspace.data.data(), out.data.data(), kspace.height, kspace.width);
  return out;
}

SamplingMask make_equispaced_mask(int width, int acceleration, const AcsSpec& acs) {
  if (width < 1) throw ConfigError("mask: width must be positive");
  if (acceleration < 1) throw ConfigError("mask: acceleration must be at least 1");
  const int acs_width = acs.width_for(width);
  if (acs_width < 1) throw ConfigError("mask: empty ACS region");
  if (acs_width > width)
    throw ConfigError("mask: ACS block of " + std::to_string(acs_width) +
                      " lines wider than image width " + std::to_string(width));

  SamplingMask mask;
  mask.width = width;
  mask.acceleration = acceleration;
  mask.acs = acs;
  mask.acs_width = acs_width;
  mask.acs_start = (width - acs_width) / 2;
  mask.columns.assign(static_cast<std::size_t>(width), 0);
  for (int c = mask.acs_start; c < mask.acs_start + acs_width; ++c) mask.columns[c] = 1;
  for (int c = 0; c < width; c += acceleration) mask.columns[c] = 1;
  return mask;
}

template <typename T>
MultiCoilKSpaceT<T> apply_mask(const MultiCoilKSpaceT<T>& kspace, const SamplingMask& mask) {
  check_kspace_like(kspace, "apply_mask");
  if (mask.width != kspace.width)
    throw ShapeError("apply_mask: mask width " + std::to_string(mask.width) +
                     " does not match k-space width " + std::to_string(kspace.width));
  MultiCoilKSpaceT<T> out = kspace;
  for (int i = 0; i < out.coils; ++i) {
    std::complex<T>* c = out.coil(i);
    for (int r = 0; r < out.height; ++r)
      for (int col = 0; col < out.width; ++col)
        if (!mask.columns[col]) c[static_cast<std::size_t>(r) * out.width + col] = {};
  }
  return out;
}

template <typename T>
CoilImagesT<T> expand(const ComplexImageT<T>& image, const SensitivityMapsT<T>& sens) {
  check_image(image, "expand");
  check_kspace_like(sens, "expand");
  if (sens.height != image.height || sens.width != image.width)
    throw ShapeError("expand: sensitivity maps do not match image shape");
  CoilImagesT<T> out(sens.coils, image.height, image.width);
  const std::size_t plane = image.data.size();
  for (int i = 0; i < sens.coils; ++i) {
    const std::complex<T>* s = sens.coil(i);
    std::complex<T>* o = out.coil(i);
    for (std::size_t p = 0; p < plane; ++p) o[p] = s[p] * image.data[p];
  }
  return out;
}

template <typename T>
ComplexImageT<T> reduce(const CoilImagesT<T>& coil_images, const SensitivityMapsT<T>& sens) {
  check_kspace_like(coil_images, "reduce");
  check_kspace_like(sens, "reduce");
  if (sens.coils != coil_images.coils || sens.height != coil_images.height ||
      sens.width != coil_images.width)
    throw ShapeError("reduce: sensitivity maps do not match coil images");
  ComplexImageT<T> out(coil_images.height, coil_images.width);
  const std::size_t plane = out.data.size();
  for (int i = 0; i < sens.coils; ++i) {
    const std::complex<T>* s = sens.coil(i);
    const std::complex<T>* x = coil_images.coil(i);
    for (std::size_t p = 0; p < plane; ++p) out.data[p] += std::conj(s[p]) * x[p];
  }
  return out;
}

template <typename T>
MultiCoilKSpaceT<T> forward_operator(const ComplexImageT<T>& image,
                                     const SensitivityMapsT<T>& sens, const SamplingMask& mask) {
  CoilImagesT<T> coils = expand(image, sens);
  for (int i = 0; i < coils.coils; ++i)
    fft::fft2c(coils.coil(i), coils.coil(i), coils.height, coils.width);
  return apply_mask(coils, mask);
}

template <typename T>
ComplexImageT<T> adjoint_operator(const MultiCoilKSpaceT<T>& kspace,
                                  const SensitivityMapsT<T>& sens, const SamplingMask& mask) {
  MultiCoilKSpaceT<T> masked = apply_mask(kspace, mask);
  for (int i = 0; i < masked.coils; ++i)
    fft::ifft2c(masked.coil(i), masked.coil(i), masked.height, masked.width);
  return reduce(masked, sens);
}

template <typename T>
std::vector<T> rss(const CoilImagesT<T>& coil_images) {
  check_kspace_like(coil_images, "rss");
  const std::size_t plane = static_cast<std::size_t>(coil_images.height) * coil_images.width;
  std::vector<T> out(plane, T(0));
  for (int i = 0; i < coil_images.coils; ++i) {
    const std::complex<T>* x = coil_images.coil(i);
    for (std::size_t p = 0; p < plane; ++p) out[p] += std::norm(x[p]);
  }
  for (auto& v : out) v = std::sqrt(v);
  return out;
}

template <typename T>
std::vector<T> zero_filled_rss(const MultiCoilKSpaceT<T>& kspace) {
  MultiCoilKSpaceT<T> imgs = kspace;
  for (int i = 0; i < imgs.coils; ++i)
    fft::ifft2c(imgs.coil(i), imgs.coil(i), imgs.height, imgs.width);
  return rss(imgs);
}

#define UMRI_INSTANTIATE_PHYSICS(T)                                                            \
  template void check_finite<T>(const ComplexImageT<T>&, const char*);                         \
  template ComplexImageT<T> fft2c<T>(const ComplexImageT<T>&);                                 \
  template ComplexImageT<T> ifft2c<T>(const ComplexImageT<T>&);                                \
  template MultiCoilKSpaceT<T> apply_mask<T>(const MultiCoilKSpaceT<T>&, const SamplingMask&); \
  template CoilImagesT<T> expand<T>(const ComplexImageT<T>&, const SensitivityMapsT<T>&);      \
  template ComplexImageT<T> reduce<T>(const CoilImagesT<T>&, const SensitivityMapsT<T>&);      \
  template MultiCoilKSpaceT<T> forward_operator<T>(const ComplexImageT<T>&,                    \
                                                   const SensitivityMapsT<T>&,                 \
                                                   const SamplingMask&);                       \
  template ComplexImageT<T> adjoint_operator<T>(const MultiCoilKSpaceT<T>&,                    \
                                                const SensitivityMapsT<T>&,                    \
                                                const SamplingMask&);                          \
  template std::vector<T> rss<T>(const CoilImagesT<T>&);                                       \
  template std::vector<T> zero_filled_rss<T>(const MultiCoilKSpaceT<T>&);

UMRI_INSTANTIATE_PHYSICS(float)
UMRI_INSTANTIATE_PHYSICS(double)

#undef UMRI_INSTANTIATE_PHYSICS

}  // namespace umri::mri
