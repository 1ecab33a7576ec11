#pragma once

#include <cstdint>
#include <string>

#include "umri/mri/types.hpp"

namespace umri::sim {

// Synthetic anatomy families with deliberately different structure so that
// cross-family evaluation is a genuine distribution shift:
//   A - stacked ellipses with an annular chamber (cardiac-like)
//   B - oblique layered bands with a wedge (knee-like)
//   C - concentric shells with interior blobs (brain-like)
enum class PhantomFamily : int { A = 0, B = 1, C = 2 };

PhantomFamily family_from_string(const std::string& s);
std::string family_to_string(PhantomFamily f);

struct PhantomSpec {
  PhantomFamily family = PhantomFamily::A;
  int size = 64;
  std::uint64_t seed = 0;
};

// Piecewise-smooth magnitude in [0,1] with a smooth low-order polynomial
// phase map; a pure function of the spec.
template <typename T>
ComplexImageT<T> generate_phantom(const PhantomSpec& spec);

// n Gaussian-lobe profiles centered at distinct positions around the border,
// each with a smooth linear phase, pixelwise RSS-normalized. Deterministic in
// (n, size).
template <typename T>
SensitivityMapsT<T> simulate_coils(int n, int size);

// k_i = F(S_i x) + z_i with i.i.d. Gaussian noise of standard deviation
// noise_std on the real and imaginary components independently.
template <typename T>
MultiCoilKSpaceT<T> synthesize_kspace(const ComplexImageT<T>& image,
                                      const SensitivityMapsT<T>& sens, double noise_std,
                                      std::uint64_t seed);

}  // namespace umri::sim
