#include <complex>

#include "umri/core/fft.hpp"
#include "umri/nn/ops.hpp"

// Differentiable ops over complex pairs laid out as (..., 2, H, W).
namespace umri::ops {

namespace {

template <typename T>
struct ComplexView {
  int batch;
  int h;
  int w;
  std::size_t plane;  // h*w
};

template <typename T>
ComplexView<T> complex_view(const Tensor<T>& x, const char* op) {
  if (x.rank() < 3) throw ShapeError(std::string(op) + ": expected (...,2,H,W)");
  const int r = static_cast<int>(x.rank());
  if (x.dim(r - 3) != 2) throw ShapeError(std::string(op) + ": complex axis must have extent 2");
  ComplexView<T> v;
  v.h = x.dim(r - 2);
  v.w = x.dim(r - 1);
  v.plane = static_cast<std::size_t>(v.h) * v.w;
  v.batch = static_cast<int>(x.numel() / (2 * v.plane));
  return v;
}

}  // namespace

template <typename T>
Tensor<T> magnitude(const Tensor<T>& x) {
  const auto cv = complex_view(x, "magnitude");
  if (cv.batch != 1) throw ShapeError("magnitude: expected a single complex image (2,H,W)");
  std::vector<T> v(cv.plane);
  const T* re = x.data();
  const T* im = x.data() + cv.plane;
  for (std::size_t p = 0; p < cv.plane; ++p) v[p] = std::sqrt(re[p] * re[p] + im[p] * im[p]);
  auto out = make_op<T>("magnitude", {cv.h, cv.w}, std::move(v), {x}, nullptr);
  if (out.requires_grad()) {
    const TensorNode<T>* self = out.node();
    const std::size_t plane = cv.plane;
    out.node()->backward = [x, self, plane](const std::vector<T>& g, const auto& sink) {
      auto& dx = sink(0);
      const T* re = x.data();
      const T* im = x.data() + plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const T m = self->value[p];
        if (m > T(0)) {
          dx[p] += g[p] * re[p] / m;
          dx[plane + p] += g[p] * im[p] / m;
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> complex_mul(const Tensor<T>& a, const Tensor<T>& b, bool conj_a, bool conj_b) {
  const auto va = complex_view(a, "complex_mul");
  const auto vb = complex_view(b, "complex_mul");
  if (va.h != vb.h || va.w != vb.w)
    throw ShapeError("complex_mul: spatial shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  if (va.batch != vb.batch && va.batch != 1 && vb.batch != 1)
    throw ShapeError("complex_mul: incompatible batch extents");
  const int batch = std::max(va.batch, vb.batch);
  const std::size_t plane = va.plane;
  const Shape out_shape = va.batch >= vb.batch ? a.shape() : b.shape();

  auto at = [&](const Tensor<T>& t, int tb, std::size_t p, bool conj) -> std::complex<T> {
    const std::size_t base = static_cast<std::size_t>(tb) * 2 * plane;
    const T re = t.value()[base + p];
    const T im = t.value()[base + plane + p];
    return {re, conj ? -im : im};
  };

  std::vector<T> v(static_cast<std::size_t>(batch) * 2 * plane);
  for (int bi = 0; bi < batch; ++bi) {
    const int ba = va.batch == 1 ? 0 : bi;
    const int bb = vb.batch == 1 ? 0 : bi;
    const std::size_t base = static_cast<std::size_t>(bi) * 2 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const std::complex<T> r = at(a, ba, p, conj_a) * at(b, bb, p, conj_b);
      v[base + p] = r.real();
      v[base + plane + p] = r.imag();
    }
  }
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  const int batch_a = va.batch, batch_b = vb.batch;
  return make_op<T>("complex_mul", out_shape, std::move(v), {a, b},
      [a, b, conj_a, conj_b, batch, batch_a, batch_b, plane, ga, gb](const std::vector<T>& g,
                                                                     const auto& sink) {
        auto fetch = [plane](const std::vector<T>& v, int tb, std::size_t p,
                             bool conj) -> std::complex<T> {
          const std::size_t base = static_cast<std::size_t>(tb) * 2 * plane;
          const T re = v[base + p];
          const T im = v[base + plane + p];
          return {re, conj ? -im : im};
        };
        std::vector<T>* da = ga ? &sink(0) : nullptr;
        std::vector<T>* db = gb ? &sink(1) : nullptr;
        for (int bi = 0; bi < batch; ++bi) {
          const int ba = batch_a == 1 ? 0 : bi;
          const int bb = batch_b == 1 ? 0 : bi;
          const std::size_t base = static_cast<std::size_t>(bi) * 2 * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            const std::complex<T> gc(g[base + p], g[base + plane + p]);
            if (da) {
              // d/d(a~) is multiplication by conj(b~); conjugate back if a was conjugated
              std::complex<T> gat = gc * std::conj(fetch(b.value(), bb, p, conj_b));
              if (conj_a) gat = std::conj(gat);
              const std::size_t abase = static_cast<std::size_t>(ba) * 2 * plane;
              (*da)[abase + p] += gat.real();
              (*da)[abase + plane + p] += gat.imag();
            }
            if (db) {
              std::complex<T> gbt = gc * std::conj(fetch(a.value(), ba, p, conj_a));
              if (conj_b) gbt = std::conj(gbt);
              const std::size_t bbase = static_cast<std::size_t>(bb) * 2 * plane;
              (*db)[bbase + p] += gbt.real();
              (*db)[bbase + plane + p] += gbt.imag();
            }
          }
        }
      });
}

template <typename T>
Tensor<T> sum_coils(const Tensor<T>& x) {
  const auto cv = complex_view(x, "sum_coils");
  if (x.rank() != 4) throw ShapeError("sum_coils: expected (N,2,H,W)");
  const std::size_t plane = cv.plane;
  std::vector<T> v(2 * plane, T(0));
  for (int n = 0; n < cv.batch; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
    for (std::size_t i = 0; i < 2 * plane; ++i) v[i] += x.value()[base + i];
  }
  const int batch = cv.batch;
  return make_op<T>("sum_coils", {2, cv.h, cv.w}, std::move(v), {x},
      [batch, plane](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (int n = 0; n < batch; ++n) {
          const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
          for (std::size_t i = 0; i < 2 * plane; ++i) dx[base + i] += g[i];
        }
      });
}

template <typename T>
Tensor<T> rss(const Tensor<T>& x) {
  const auto cv = complex_view(x, "rss");
  if (x.rank() != 4) throw ShapeError("rss: expected (N,2,H,W)");
  const std::size_t plane = cv.plane;
  std::vector<T> v(plane, T(0));
  for (int n = 0; n < cv.batch; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const T re = x.value()[base + p];
      const T im = x.value()[base + plane + p];
      v[p] += re * re + im * im;
    }
  }
  for (std::size_t p = 0; p < plane; ++p) v[p] = std::sqrt(v[p]);
  auto out = make_op<T>("rss", {cv.h, cv.w}, std::move(v), {x}, nullptr);
  if (out.requires_grad()) {
    const TensorNode<T>* self = out.node();
    const int batch = cv.batch;
    out.node()->backward = [x, self, batch, plane](const std::vector<T>& g, const auto& sink) {
      auto& dx = sink(0);
      for (int n = 0; n < batch; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          const T r = self->value[p];
          if (r > T(0)) {
            const T gp = g[p] / r;
            dx[base + p] += gp * x.value()[base + p];
            dx[base + plane + p] += gp * x.value()[base + plane + p];
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> normalize_rss(const Tensor<T>& x, double support_eps) {
  const auto cv = complex_view(x, "normalize_rss");
  if (x.rank() != 4) throw ShapeError("normalize_rss: expected (N,2,H,W)");
  const std::size_t plane = cv.plane;
  const int batch = cv.batch;
  auto r = std::make_shared<std::vector<T>>(plane, T(0));
  for (int n = 0; n < batch; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const T re = x.value()[base + p];
      const T im = x.value()[base + plane + p];
      (*r)[p] += re * re + im * im;
    }
  }
  const T eps = static_cast<T>(support_eps);
  std::vector<T> v(x.numel(), T(0));
  for (std::size_t p = 0; p < plane; ++p) (*r)[p] = std::sqrt((*r)[p]);
  for (int n = 0; n < batch; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      if ((*r)[p] > eps) {
        v[base + p] = x.value()[base + p] / (*r)[p];
        v[base + plane + p] = x.value()[base + plane + p] / (*r)[p];
      }
    }
  }
  return make_op<T>("normalize_rss", x.shape(), std::move(v), {x},
      [x, r, batch, plane, eps](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (std::size_t p = 0; p < plane; ++p) {
          const T rp = (*r)[p];
          if (rp <= eps) continue;
          // d(x_i/r)/dx_j = delta_ij / r - x_i x_j / r^3 summed against g
          T dot = T(0);
          for (int n = 0; n < batch; ++n) {
            const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
            dot += g[base + p] * x.value()[base + p] +
                   g[base + plane + p] * x.value()[base + plane + p];
          }
          const T r3 = rp * rp * rp;
          for (int n = 0; n < batch; ++n) {
            const std::size_t base = static_cast<std::size_t>(n) * 2 * plane;
            dx[base + p] += g[base + p] / rp - dot * x.value()[base + p] / r3;
            dx[base + plane + p] += g[base + plane + p] / rp - dot * x.value()[base + plane + p] / r3;
          }
        }
      });
}

namespace {

template <typename T>
std::vector<T> fft_planes(const std::vector<T>& v, int batch, int h, int w, bool inverse) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> out(v.size());
  std::vector<std::complex<T>> buf(plane), res(plane);
  for (int b = 0; b < batch; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * 2 * plane;
    for (std::size_t p = 0; p < plane; ++p) buf[p] = {v[base + p], v[base + plane + p]};
    if (inverse) {
      fft::ifft2c(buf.data(), res.data(), h, w);
    } else {
      fft::fft2c(buf.data(), res.data(), h, w);
    }
    for (std::size_t p = 0; p < plane; ++p) {
      out[base + p] = res[p].real();
      out[base + plane + p] = res[p].imag();
    }
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> fft2c(const Tensor<T>& x) {
  const auto cv = complex_view(x, "fft2c");
  std::vector<T> v = fft_planes(x.value(), cv.batch, cv.h, cv.w, false);
  const int batch = cv.batch, h = cv.h, w = cv.w;
  return make_op<T>("fft2c", x.shape(), std::move(v), {x},
      [batch, h, w](const std::vector<T>& g, const auto& sink) {
        // adjoint of the unitary transform (as a real-linear map) is its inverse
        auto& dx = sink(0);
        std::vector<T> gt = fft_planes(g, batch, h, w, true);
        for (std::size_t i = 0; i < gt.size(); ++i) dx[i] += gt[i];
      });
}

template <typename T>
Tensor<T> ifft2c(const Tensor<T>& x) {
  const auto cv = complex_view(x, "ifft2c");
  std::vector<T> v = fft_planes(x.value(), cv.batch, cv.h, cv.w, true);
  const int batch = cv.batch, h = cv.h, w = cv.w;
  return make_op<T>("ifft2c", x.shape(), std::move(v), {x},
      [batch, h, w](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        std::vector<T> gt = fft_planes(g, batch, h, w, false);
        for (std::size_t i = 0; i < gt.size(); ++i) dx[i] += gt[i];
      });
}

template <typename T>
Tensor<T> mask_cols(const Tensor<T>& x, const std::vector<std::uint8_t>& mask) {
  if (x.rank() < 1) throw ShapeError("mask_cols: scalar input");
  const std::size_t w = static_cast<std::size_t>(x.dim(static_cast<int>(x.rank()) - 1));
  if (mask.size() != w)
    throw ShapeError("mask_cols: mask width " + std::to_string(mask.size()) +
                     " does not match tensor width " + std::to_string(w));
  const std::size_t rows = x.numel() / w;
  std::vector<T> v(x.numel());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c)
      v[r * w + c] = mask[c] ? x.value()[r * w + c] : T(0);
  auto mask_copy = std::make_shared<std::vector<std::uint8_t>>(mask);
  return make_op<T>("mask_cols", x.shape(), std::move(v), {x},
      [mask_copy, rows, w](const std::vector<T>& g, const auto& sink) {
        auto& dx = sink(0);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < w; ++c)
            if ((*mask_copy)[c]) dx[r * w + c] += g[r * w + c];
      });
}

#define UMRI_INSTANTIATE_CPLX(T)                                                          \
  template Tensor<T> magnitude<T>(const Tensor<T>&);                                     \
  template Tensor<T> complex_mul<T>(const Tensor<T>&, const Tensor<T>&, bool, bool);     \
  template Tensor<T> sum_coils<T>(const Tensor<T>&);                                     \
  template Tensor<T> rss<T>(const Tensor<T>&);                                           \
  template Tensor<T> normalize_rss<T>(const Tensor<T>&, double);                         \
  template Tensor<T> fft2c<T>(const Tensor<T>&);                                         \
  template Tensor<T> ifft2c<T>(const Tensor<T>&);                                        \
  template Tensor<T> mask_cols<T>(const Tensor<T>&, const std::vector<std::uint8_t>&);

UMRI_INSTANTIATE_CPLX(float)
UMRI_INSTANTIATE_CPLX(double)

#undef UMRI_INSTANTIATE_CPLX

}  // namespace umri::ops
