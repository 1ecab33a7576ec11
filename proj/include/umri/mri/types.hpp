#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "umri/core/errors.hpp"

namespace umri {

// ACS region given either as an explicit line count or as a fraction of the
// width that is fully sampled at the center.
struct AcsSpec {
  enum class Kind { Lines, CenterFraction };
  Kind kind = Kind::Lines;
  int lines = 0;
  double fraction = 0.0;

  static AcsSpec acs_lines(int n) { return {Kind::Lines, n, 0.0}; }
  static AcsSpec center_fraction(double f) { return {Kind::CenterFraction, 0, f}; }

  // resolved ACS width for a given image width (round half up, floor 1)
  int width_for(int image_width) const {
    if (kind == Kind::Lines) return lines;
    const int w = static_cast<int>(std::floor(fraction * image_width + 0.5));
    return w < 1 ? 1 : w;
  }
};

template <typename T>
struct ComplexImageT {
  int height = 0;
  int width = 0;
  std::vector<std::complex<T>> data;  // row-major

  ComplexImageT() = default;
  ComplexImageT(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w) {}

  std::complex<T>& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  const std::complex<T>& at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * width + c];
  }
};

template <typename T>
struct MultiCoilKSpaceT {
  int coils = 0;
  int height = 0;
  int width = 0;
  std::vector<std::complex<T>> data;  // coil-major, then row-major

  MultiCoilKSpaceT() = default;
  MultiCoilKSpaceT(int n, int h, int w)
      : coils(n), height(h), width(w), data(static_cast<std::size_t>(n) * h * w) {}

  std::complex<T>* coil(int i) { return data.data() + static_cast<std::size_t>(i) * height * width; }
  const std::complex<T>* coil(int i) const {
    return data.data() + static_cast<std::size_t>(i) * height * width;
  }
};

// Per-coil images share the k-space layout.
template <typename T>
using CoilImagesT = MultiCoilKSpaceT<T>;

// Complex sensitivity profiles, RSS-normalized on their support.
template <typename T>
using SensitivityMapsT = MultiCoilKSpaceT<T>;

// 1D Cartesian mask over the phase-encode (width) axis.
struct SamplingMask {
  int width = 0;
  std::vector<std::uint8_t> columns;
  int acceleration = 1;
  AcsSpec acs;
  int acs_start = 0;
  int acs_width = 0;

  int sampled_count() const {
    int n = 0;
    for (auto c : columns) n += c;
    return n;
  }
  double net_acceleration() const {
    return static_cast<double>(width) / static_cast<double>(sampled_count());
  }
  bool acs_contains(int col) const { return col >= acs_start && col < acs_start + acs_width; }
};

using ComplexImage = ComplexImageT<float>;
using MultiCoilKSpace = MultiCoilKSpaceT<float>;

}  // namespace umri
