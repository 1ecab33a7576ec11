#include "umri/core/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace umri::kernels {

namespace {

inline std::size_t idx4(int a, int b, int c, int d, int db, int dc, int dd) {
  return ((static_cast<std::size_t>(a) * db + b) * dc + c) * dd + d;
}

// output index range [lo, hi) with o*stride - pad + k inside [0, limit)
inline void tap_range(int k, int stride, int pad, int limit, int out_size, int& lo, int& hi) {
  const int num_lo = pad - k;
  lo = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  const int num_hi = limit - 1 + pad - k;
  hi = num_hi < 0 ? 0 : num_hi / stride + 1;
  lo = std::min(lo, out_size);
  hi = std::clamp(hi, lo, out_size);
}

}  // namespace

// Accumulation per output element runs in (ic, ky, kx) order, matching the
// serial reference element-wise, so the two are bitwise identical.
template <typename T>
void conv2d_forward(const T* in, int n, int ci, int h, int w, const T* weight, int co, int kh,
                    int kw, const T* bias, int stride, int pad, T* out) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
#pragma omp parallel for collapse(2) schedule(static) if (n * co > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int oc = 0; oc < co; ++oc) {
      T* oslice = out + idx4(nn, oc, 0, 0, co, oh, ow);
      const T b = bias ? bias[oc] : T(0);
      std::fill(oslice, oslice + static_cast<std::size_t>(oh) * ow, b);
      for (int ic = 0; ic < ci; ++ic) {
        const T* islice = in + idx4(nn, ic, 0, 0, ci, h, w);
        const T* wslice = weight + idx4(oc, ic, 0, 0, ci, kh, kw);
        for (int ky = 0; ky < kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(ky, stride, pad, h, oh, oy_lo, oy_hi);
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = wslice[ky * kw + kx];
            int ox_lo, ox_hi;
            tap_range(kx, stride, pad, w, ow, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * stride - pad + ky;
              T* orow = oslice + static_cast<std::size_t>(oy) * ow;
              const T* irow = islice + static_cast<std::size_t>(iy) * w;
              const int off = kx - pad;
              if (stride == 1) {
#pragma omp simd
                for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox + off];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox * stride + off];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gout, int n, int co, int oh, int ow, const T* weight, int ci,
                           int kh, int kw, int h, int w, int stride, int pad, T* gin) {
#pragma omp parallel for collapse(2) schedule(static) if (n * ci > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < ci; ++ic) {
      T* gslice = gin + idx4(nn, ic, 0, 0, ci, h, w);
      std::fill(gslice, gslice + static_cast<std::size_t>(h) * w, T(0));
      for (int oc = 0; oc < co; ++oc) {
        const T* goslice = gout + idx4(nn, oc, 0, 0, co, oh, ow);
        const T* wslice = weight + idx4(oc, ic, 0, 0, ci, kh, kw);
        for (int ky = 0; ky < kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(ky, stride, pad, h, oh, oy_lo, oy_hi);
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = wslice[ky * kw + kx];
            int ox_lo, ox_hi;
            tap_range(kx, stride, pad, w, ow, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * stride - pad + ky;
              const T* grow = goslice + static_cast<std::size_t>(oy) * ow;
              T* irow = gslice + static_cast<std::size_t>(iy) * w;
              const int off = kx - pad;
              if (stride == 1) {
#pragma omp simd
                for (int ox = ox_lo; ox < ox_hi; ++ox) irow[ox + off] += wv * grow[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) irow[ox * stride + off] += wv * grow[ox];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const T* gout, int n, int co, int oh, int ow, const T* in, int ci,
                            int h, int w, int kh, int kw, int stride, int pad, T* gweight,
                            T* gbias) {
#pragma omp parallel for schedule(static) if (co > 1)
  for (int oc = 0; oc < co; ++oc) {
    T* gw = gweight + idx4(oc, 0, 0, 0, ci, kh, kw);
    std::fill(gw, gw + static_cast<std::size_t>(ci) * kh * kw, T(0));
    T gb = T(0);
    for (int nn = 0; nn < n; ++nn) {
      const T* goslice = gout + idx4(nn, oc, 0, 0, co, oh, ow);
      for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) gb += goslice[i];
      for (int ic = 0; ic < ci; ++ic) {
        const T* islice = in + idx4(nn, ic, 0, 0, ci, h, w);
        for (int ky = 0; ky < kh; ++ky) {
          int oy_lo, oy_hi;
          tap_range(ky, stride, pad, h, oh, oy_lo, oy_hi);
          for (int kx = 0; kx < kw; ++kx) {
            int ox_lo, ox_hi;
            tap_range(kx, stride, pad, w, ow, ox_lo, ox_hi);
            T acc = T(0);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * stride - pad + ky;
              const T* grow = goslice + static_cast<std::size_t>(oy) * ow;
              const T* irow = islice + static_cast<std::size_t>(iy) * w;
              const int off = kx - pad;
              if (stride == 1) {
#pragma omp simd reduction(+ : acc)
                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * irow[ox + off];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * irow[ox * stride + off];
              }
            }
            gw[ic * kh * kw + ky * kw + kx] += acc;
          }
        }
      }
    }
    if (gbias) gbias[oc] = gb;
  }
}

template <typename T>
void depthwise_forward(const T* in, int n, int c, int h, int w, const T* weight, int kh, int kw,
                       const T* bias, int pad, T* out) {
  const int oh = h + 2 * pad - kh + 1;
  const int ow = w + 2 * pad - kw + 1;
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      const T* islice = in + idx4(nn, ic, 0, 0, c, h, w);
      const T* wslice = weight + static_cast<std::size_t>(ic) * kh * kw;
      T* oslice = out + idx4(nn, ic, 0, 0, c, oh, ow);
      const T b = bias ? bias[ic] : T(0);
      std::fill(oslice, oslice + static_cast<std::size_t>(oh) * ow, b);
      for (int ky = 0; ky < kh; ++ky) {
        int oy_lo, oy_hi;
        tap_range(ky, 1, pad, h, oh, oy_lo, oy_hi);
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = wslice[ky * kw + kx];
          int ox_lo, ox_hi;
          tap_range(kx, 1, pad, w, ow, ox_lo, ox_hi);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy - pad + ky;
            T* orow = oslice + static_cast<std::size_t>(oy) * ow;
            const T* irow = islice + static_cast<std::size_t>(iy) * w;
            const int off = kx - pad;
#pragma omp simd
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox + off];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_backward_input(const T* gout, int n, int c, int oh, int ow, const T* weight, int kh,
                              int kw, int h, int w, int pad, T* gin) {
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      T* gslice = gin + idx4(nn, ic, 0, 0, c, h, w);
      std::fill(gslice, gslice + static_cast<std::size_t>(h) * w, T(0));
      const T* goslice = gout + idx4(nn, ic, 0, 0, c, oh, ow);
      const T* wslice = weight + static_cast<std::size_t>(ic) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        int oy_lo, oy_hi;
        tap_range(ky, 1, pad, h, oh, oy_lo, oy_hi);
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = wslice[ky * kw + kx];
          int ox_lo, ox_hi;
          tap_range(kx, 1, pad, w, ow, ox_lo, ox_hi);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy - pad + ky;
            const T* grow = goslice + static_cast<std::size_t>(oy) * ow;
            T* irow = gslice + static_cast<std::size_t>(iy) * w;
            const int off = kx - pad;
#pragma omp simd
            for (int ox = ox_lo; ox < ox_hi; ++ox) irow[ox + off] += wv * grow[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_backward_weight(const T* gout, int n, int c, int oh, int ow, const T* in, int h,
                               int w, int kh, int kw, int pad, T* gweight, T* gbias) {
#pragma omp parallel for schedule(static) if (c > 1)
  for (int ic = 0; ic < c; ++ic) {
    T* gw = gweight + static_cast<std::size_t>(ic) * kh * kw;
    std::fill(gw, gw + static_cast<std::size_t>(kh) * kw, T(0));
    T gb = T(0);
    for (int nn = 0; nn < n; ++nn) {
      const T* goslice = gout + idx4(nn, ic, 0, 0, c, oh, ow);
      const T* islice = in + idx4(nn, ic, 0, 0, c, h, w);
      for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) gb += goslice[i];
      for (int ky = 0; ky < kh; ++ky) {
        int oy_lo, oy_hi;
        tap_range(ky, 1, pad, h, oh, oy_lo, oy_hi);
        for (int kx = 0; kx < kw; ++kx) {
          int ox_lo, ox_hi;
          tap_range(kx, 1, pad, w, ow, ox_lo, ox_hi);
          T acc = T(0);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy - pad + ky;
            const T* grow = goslice + static_cast<std::size_t>(oy) * ow;
            const T* irow = islice + static_cast<std::size_t>(iy) * w;
            const int off = kx - pad;
#pragma omp simd reduction(+ : acc)
            for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * irow[ox + off];
          }
          gw[ky * kw + kx] += acc;
        }
      }
    }
    if (gbias) gbias[ic] = gb;
  }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static) if (m > 1)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    const T* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_at(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  // a stored k x m; c = a^T b (m x n)
#pragma omp parallel for schedule(static) if (m > 1)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::size_t>(p) * m + i];
      const T* brow = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  // b stored n x k; c = a b^T (m x n)
#pragma omp parallel for schedule(static) if (m > 1)
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * k;
      T acc = T(0);
#pragma omp simd reduction(+ : acc)
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      if (accumulate) {
        crow[j] += acc;
      } else {
        crow[j] = acc;
      }
    }
  }
}

namespace {

struct BilinearTap {
  int lo;
  int hi;
  double frac;
};

inline BilinearTap bilinear_tap(int out_i, int in_size, int out_size) {
  // align_corners=false source coordinate
  const double scale = static_cast<double>(in_size) / out_size;
  double src = (out_i + 0.5) * scale - 0.5;
  if (src < 0) src = 0;
  if (src > in_size - 1) src = in_size - 1;
  const int lo = static_cast<int>(src);
  const int hi = std::min(lo + 1, in_size - 1);
  return {lo, hi, src - lo};
}

}  // namespace

template <typename T>
void bilinear_forward(const T* in, int n, int c, int h, int w, int oh, int ow, T* out) {
  if (oh == h && ow == w) {
    std::copy(in, in + static_cast<std::size_t>(n) * c * h * w, out);
    return;
  }
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      const T* islice = in + idx4(nn, ic, 0, 0, c, h, w);
      T* oslice = out + idx4(nn, ic, 0, 0, c, oh, ow);
      for (int oy = 0; oy < oh; ++oy) {
        const BilinearTap ty = bilinear_tap(oy, h, oh);
        for (int ox = 0; ox < ow; ++ox) {
          const BilinearTap tx = bilinear_tap(ox, w, ow);
          const T v00 = islice[static_cast<std::size_t>(ty.lo) * w + tx.lo];
          const T v01 = islice[static_cast<std::size_t>(ty.lo) * w + tx.hi];
          const T v10 = islice[static_cast<std::size_t>(ty.hi) * w + tx.lo];
          const T v11 = islice[static_cast<std::size_t>(ty.hi) * w + tx.hi];
          const T fy = static_cast<T>(ty.frac);
          const T fx = static_cast<T>(tx.frac);
          oslice[static_cast<std::size_t>(oy) * ow + ox] =
              (T(1) - fy) * ((T(1) - fx) * v00 + fx * v01) + fy * ((T(1) - fx) * v10 + fx * v11);
        }
      }
    }
  }
}

template <typename T>
void bilinear_backward(const T* gout, int n, int c, int h, int w, int oh, int ow, T* gin) {
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      T* gslice = gin + idx4(nn, ic, 0, 0, c, h, w);
      std::fill(gslice, gslice + static_cast<std::size_t>(h) * w, T(0));
      const T* goslice = gout + idx4(nn, ic, 0, 0, c, oh, ow);
      if (oh == h && ow == w) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) gslice[i] = goslice[i];
        continue;
      }
      for (int oy = 0; oy < oh; ++oy) {
        const BilinearTap ty = bilinear_tap(oy, h, oh);
        for (int ox = 0; ox < ow; ++ox) {
          const BilinearTap tx = bilinear_tap(ox, w, ow);
          const T g = goslice[static_cast<std::size_t>(oy) * ow + ox];
          const T fy = static_cast<T>(ty.frac);
          const T fx = static_cast<T>(tx.frac);
          gslice[static_cast<std::size_t>(ty.lo) * w + tx.lo] += (T(1) - fy) * (T(1) - fx) * g;
          gslice[static_cast<std::size_t>(ty.lo) * w + tx.hi] += (T(1) - fy) * fx * g;
          gslice[static_cast<std::size_t>(ty.hi) * w + tx.lo] += fy * (T(1) - fx) * g;
          gslice[static_cast<std::size_t>(ty.hi) * w + tx.hi] += fy * fx * g;
        }
      }
    }
  }
}

template <typename T>
void avgpool2_forward(const T* in, int n, int c, int h, int w, T* out) {
  const int oh = h / 2;
  const int ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      const T* islice = in + idx4(nn, ic, 0, 0, c, h, w);
      T* oslice = out + idx4(nn, ic, 0, 0, c, oh, ow);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const std::size_t base = static_cast<std::size_t>(2 * oy) * w + 2 * ox;
          oslice[static_cast<std::size_t>(oy) * ow + ox] =
              (islice[base] + islice[base + 1] + islice[base + w] + islice[base + w + 1]) * T(0.25);
        }
      }
    }
  }
}

template <typename T>
void avgpool2_backward(const T* gout, int n, int c, int h, int w, T* gin) {
  const int oh = h / 2;
  const int ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static) if (n * c > 1)
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      T* gslice = gin + idx4(nn, ic, 0, 0, c, h, w);
      const T* goslice = gout + idx4(nn, ic, 0, 0, c, oh, ow);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const T g = goslice[static_cast<std::size_t>(oy) * ow + ox] * T(0.25);
          const std::size_t base = static_cast<std::size_t>(2 * oy) * w + 2 * ox;
          gslice[base] = g;
          gslice[base + 1] = g;
          gslice[base + w] = g;
          gslice[base + w + 1] = g;
        }
      }
    }
  }
}

namespace serial {

template <typename T>
void conv2d_forward(const T* in, int n, int ci, int h, int w, const T* weight, int co, int kh,
                    int kw, const T* bias, int stride, int pad, T* out) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  for (int nn = 0; nn < n; ++nn) {
    for (int oc = 0; oc < co; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T acc = bias ? bias[oc] : T(0);
          for (int ic = 0; ic < ci; ++ic) {
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= w) continue;
                acc += in[idx4(nn, ic, iy, ix, ci, h, w)] * weight[idx4(oc, ic, ky, kx, ci, kh, kw)];
              }
            }
          }
          out[idx4(nn, oc, oy, ox, co, oh, ow)] = acc;
        }
      }
    }
  }
}

template <typename T>
void depthwise_forward(const T* in, int n, int c, int h, int w, const T* weight, int kh, int kw,
                       const T* bias, int pad, T* out) {
  const int oh = h + 2 * pad - kh + 1;
  const int ow = w + 2 * pad - kw + 1;
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T acc = bias ? bias[ic] : T(0);
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox - pad + kx;
              if (ix < 0 || ix >= w) continue;
              acc += in[idx4(nn, ic, iy, ix, c, h, w)] *
                     weight[(static_cast<std::size_t>(ic) * kh + ky) * kw + kx];
            }
          }
          out[idx4(nn, ic, oy, ox, c, oh, ow)] = acc;
        }
      }
    }
  }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void bilinear_forward(const T* in, int n, int c, int h, int w, int oh, int ow, T* out) {
  if (oh == h && ow == w) {
    std::copy(in, in + static_cast<std::size_t>(n) * c * h * w, out);
    return;
  }
  for (int nn = 0; nn < n; ++nn) {
    for (int ic = 0; ic < c; ++ic) {
      const T* islice = in + idx4(nn, ic, 0, 0, c, h, w);
      T* oslice = out + idx4(nn, ic, 0, 0, c, oh, ow);
      for (int oy = 0; oy < oh; ++oy) {
        const BilinearTap ty = bilinear_tap(oy, h, oh);
        for (int ox = 0; ox < ow; ++ox) {
          const BilinearTap tx = bilinear_tap(ox, w, ow);
          const T v00 = islice[static_cast<std::size_t>(ty.lo) * w + tx.lo];
          const T v01 = islice[static_cast<std::size_t>(ty.lo) * w + tx.hi];
          const T v10 = islice[static_cast<std::size_t>(ty.hi) * w + tx.lo];
          const T v11 = islice[static_cast<std::size_t>(ty.hi) * w + tx.hi];
          const T fy = static_cast<T>(ty.frac);
          const T fx = static_cast<T>(tx.frac);
          oslice[static_cast<std::size_t>(oy) * ow + ox] =
              (T(1) - fy) * ((T(1) - fx) * v00 + fx * v01) + fy * ((T(1) - fx) * v10 + fx * v11);
        }
      }
    }
  }
}

}  // namespace serial

#define UMRI_INSTANTIATE_KERNELS(T)                                                              \
  template void conv2d_forward<T>(const T*, int, int, int, int, const T*, int, int, int,         \
                                  const T*, int, int, T*);                                       \
  template void conv2d_backward_input<T>(const T*, int, int, int, int, const T*, int, int, int,  \
                                         int, int, int, int, T*);                                \
  template void conv2d_backward_weight<T>(const T*, int, int, int, int, const T*, int, int, int, \
                                          int, int, int, int, T*, T*);                           \
  template void depthwise_forward<T>(const T*, int, int, int, int, const T*, int, int, const T*, \
                                     int, T*);                                                   \
  template void depthwise_backward_input<T>(const T*, int, int, int, int, const T*, int, int,    \
                                            int, int, int, T*);                                  \
  template void depthwise_backward_weight<T>(const T*, int, int, int, int, const T*, int, int,   \
                                             int, int, int, T*, T*);                             \
  template void matmul<T>(const T*, const T*, T*, int, int, int, bool);                          \
  template void matmul_at<T>(const T*, const T*, T*, int, int, int, bool);                       \
  template void matmul_bt<T>(const T*, const T*, T*, int, int, int, bool);                       \
  template void bilinear_forward<T>(const T*, int, int, int, int, int, int, T*);                 \
  template void bilinear_backward<T>(const T*, int, int, int, int, int, int, T*);                \
  template void avgpool2_forward<T>(const T*, int, int, int, int, T*);                           \
  template void avgpool2_backward<T>(const T*, int, int, int, int, T*);                          \
  template void serial::conv2d_forward<T>(const T*, int, int, int, int, const T*, int, int, int, \
                                          const T*, int, int, T*);                               \
  template void serial::depthwise_forward<T>(const T*, int, int, int, int, const T*, int, int,   \
                                             const T*, int, T*);                                 \
  template void serial::matmul<T>(const T*, const T*, T*, int, int, int, bool);                  \
  template void serial::bilinear_forward<T>(const T*, int, int, int, int, int, int, T*);

UMRI_INSTANTIATE_KERNELS(float)
UMRI_INSTANTIATE_KERNELS(double)

#undef UMRI_INSTANTIATE_KERNELS

}  // namespace umri::kernels
