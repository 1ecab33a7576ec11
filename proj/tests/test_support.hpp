#pragma once

// Shared test oracles and generators. These stay independent of the library
// paths they check: the DFT oracle is a direct O(N^2) sum, the convolution
// oracle a nested loop, and gradients are verified by central differences.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "umri/core/rng.hpp"
#include "umri/nn/ops.hpp"
#include "umri/nn/tensor.hpp"

namespace testsup {

constexpr double kPi = 3.14159265358979323846;

// Direct centered orthonormal 2D DFT: ifftshift -> O(N^2) DFT -> fftshift,
// 1/sqrt(hw) scaling. sign = -1 forward, +1 inverse.
inline std::vector<std::complex<double>> dft2c_oracle(const std::vector<std::complex<double>>& in,
                                                      int h, int w, int sign) {
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  std::vector<std::complex<double>> shifted(in.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      shifted[static_cast<std::size_t>(r) * w + c] =
          in[static_cast<std::size_t>(wrap(r + h / 2, h)) * w + wrap(c + w / 2, w)];  // ifftshift
  std::vector<std::complex<double>> freq(in.size());
  for (int kr = 0; kr < h; ++kr) {
    for (int kc = 0; kc < w; ++kc) {
      std::complex<double> acc{0.0, 0.0};
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double ang = sign * 2.0 * kPi *
                             (static_cast<double>(kr) * r / h + static_cast<double>(kc) * c / w);
          acc += shifted[static_cast<std::size_t>(r) * w + c] *
                 std::complex<double>(std::cos(ang), std::sin(ang));
        }
      freq[static_cast<std::size_t>(kr) * w + kc] = acc;
    }
  }
  std::vector<std::complex<double>> out(in.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      out[static_cast<std::size_t>(wrap(r + h / 2, h)) * w + wrap(c + w / 2, w)] =
          freq[static_cast<std::size_t>(r) * w + c] / std::sqrt(static_cast<double>(h) * w);
  return out;
}

// plain nested-loop cross-correlation, zero padding
inline std::vector<double> conv2d_oracle(const std::vector<double>& in, int n, int ci, int h,
                                         int w, const std::vector<double>& weight, int co, int kh,
                                         int kw, const std::vector<double>& bias, int stride,
                                         int pad) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n) * co * oh * ow, 0.0);
  for (int nn = 0; nn < n; ++nn)
    for (int oc = 0; oc < co; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (int ic = 0; ic < ci; ++ic)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += in[((static_cast<std::size_t>(nn) * ci + ic) * h + iy) * w + ix] *
                       weight[((static_cast<std::size_t>(oc) * ci + ic) * kh + ky) * kw + kx];
              }
          out[((static_cast<std::size_t>(nn) * co + oc) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

inline std::vector<double> random_vec(std::size_t n, umri::Rng& rng, double lo = -1.0,
                                      double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline umri::Tensor<double> random_tensor(umri::Shape shape, umri::Rng& rng, bool requires_grad,
                                          double lo = -1.0, double hi = 1.0) {
  const std::size_t n = umri::shape_numel(shape);
  std::vector<double> v = random_vec(n, rng, lo, hi);
  return requires_grad ? umri::Tensor<double>::param(std::move(shape), std::move(v))
                       : umri::Tensor<double>::constant(std::move(shape), std::move(v));
}

// Central finite-difference check of d(loss)/d(leaf) for every element of
// `leaf`. `loss_fn` must rebuild the whole graph from current leaf values.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-4});
  return std::abs(a - b) / denom;
}

inline GradCheckResult grad_check(
    const std::function<umri::Tensor<double>()>& loss_fn, umri::Tensor<double> leaf,
    double h = 1e-5, std::size_t max_coords = 24, std::uint64_t pick_seed = 7) {
  umri::Tensor<double> loss = loss_fn();
  umri::GradMap<double> grads = umri::backward(loss);
  const auto it = grads.find(leaf.node());
  std::vector<double> analytic(leaf.numel(), 0.0);
  if (it != grads.end()) analytic = it->second;

  // sample a subset of coordinates for large tensors
  std::vector<std::size_t> coords;
  if (leaf.numel() <= max_coords) {
    for (std::size_t i = 0; i < leaf.numel(); ++i) coords.push_back(i);
  } else {
    umri::Rng rng(umri::derive_seed(pick_seed, "grad-coords"));
    for (std::size_t i = 0; i < max_coords; ++i)
      coords.push_back(static_cast<std::size_t>(rng.uniform(0.0, 1.0) * leaf.numel()) %
                       leaf.numel());
  }

  GradCheckResult result;
  for (std::size_t i : coords) {
    const double orig = leaf.value()[i];
    leaf.value_mut()[i] = orig + h;
    const double lp = loss_fn().value()[0];
    leaf.value_mut()[i] = orig - h;
    const double lm = loss_fn().value()[0];
    leaf.value_mut()[i] = orig;
    const double fd = (lp - lm) / (2.0 * h);
    result.max_rel_err = std::max(result.max_rel_err, rel_err(fd, analytic[i]));
    ++result.checked;
  }
  return result;
}

// scalar probe: random fixed projection of a tensor, makes any op's output a
// scalar loss with well-scaled gradients
inline umri::Tensor<double> probe(const umri::Tensor<double>& x, std::uint64_t seed = 99) {
  umri::Rng rng(umri::derive_seed(seed, "probe"));
  std::vector<double> w = random_vec(x.numel(), rng, -1.0, 1.0);
  umri::Tensor<double> weights =
      umri::Tensor<double>::constant({static_cast<int>(x.numel())}, std::move(w));
  using umri::ops::mul;
  using umri::ops::reshape;
  using umri::ops::sum_all;
  return sum_all(mul(reshape(x, {static_cast<int>(x.numel())}), weights));
}

}  // namespace testsup
