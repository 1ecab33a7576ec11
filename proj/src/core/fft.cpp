#include "umri/core/fft.hpp"

#include <cmath>

#include "umri/core/errors.hpp"

namespace umri::fft {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

std::vector<std::size_t> make_bitrev(std::size_t n) {
  std::vector<std::size_t> rev(n, 0);
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    rev[i] = j;
  }
  return rev;
}

template <typename T>
std::vector<std::complex<T>> make_twiddle(std::size_t n) {
  std::vector<std::complex<T>> tw(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double a = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
    tw[j] = std::complex<T>(static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a)));
  }
  return tw;
}

// radix-2 butterflies over a bit-reversal-permuted buffer
template <typename T>
void radix2_core(std::complex<T>* a, std::size_t n, const std::vector<std::size_t>& rev,
                 const std::vector<std::complex<T>>& tw, bool inverse) {
  for (std::size_t i = 0; i < n; ++i) {
    if (i < rev[i]) std::swap(a[i], a[rev[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<T> w = tw[j * stride];
        if (inverse) w = std::conj(w);
        const std::complex<T> u = a[i + j];
        const std::complex<T> v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

}  // namespace

template <typename T>
Plan<T>::Plan(std::size_t n) : n_(n) {
  if (n == 0) throw ShapeError("fft: zero-length transform");
  pow2_ = is_pow2(n);
  if (pow2_) {
    twiddle_ = make_twiddle<T>(n);
    bitrev_ = make_bitrev(n);
    return;
  }
  m_ = next_pow2(2 * n - 1);
  chirp_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    // j^2 mod 2n keeps the trig argument small for large n
    const std::size_t j2 = (j * j) % (2 * n);
    const double a = kPi * static_cast<double>(j2) / static_cast<double>(n);
    chirp_[j] = std::complex<T>(static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a)));
  }
  m_twiddle_ = make_twiddle<T>(m_);
  m_bitrev_ = make_bitrev(m_);
  std::vector<std::complex<T>> b(m_, std::complex<T>(0, 0));
  b[0] = chirp_[0];
  for (std::size_t j = 1; j < n; ++j) {
    b[j] = chirp_[j];
    b[m_ - j] = chirp_[j];
  }
  radix2_core(b.data(), m_, m_bitrev_, m_twiddle_, false);
  chirp_fft_ = std::move(b);
}

template <typename T>
void Plan<T>::radix2(std::complex<T>* data, bool inverse) const {
  radix2_core(data, n_, bitrev_, twiddle_, inverse);
}

template <typename T>
void Plan<T>::bluestein(std::complex<T>* data, bool inverse) const {
  // chirp-z: X_k = conj(c_k) * (x.c* (*) c)_k; inverse via conjugation
  std::vector<std::complex<T>> a(m_, std::complex<T>(0, 0));
  if (inverse) {
    for (std::size_t j = 0; j < n_; ++j) a[j] = std::conj(data[j]) * std::conj(chirp_[j]);
  } else {
    for (std::size_t j = 0; j < n_; ++j) a[j] = data[j] * std::conj(chirp_[j]);
  }
  radix2_core(a.data(), m_, m_bitrev_, m_twiddle_, false);
  for (std::size_t j = 0; j < m_; ++j) a[j] *= chirp_fft_[j];
  radix2_core(a.data(), m_, m_bitrev_, m_twiddle_, true);
  const T scale = static_cast<T>(1.0 / static_cast<double>(m_));
  if (inverse) {
    for (std::size_t j = 0; j < n_; ++j) data[j] = std::conj(a[j] * std::conj(chirp_[j]) * scale);
  } else {
    for (std::size_t j = 0; j < n_; ++j) data[j] = a[j] * std::conj(chirp_[j]) * scale;
  }
}

template <typename T>
void Plan<T>::forward(std::complex<T>* data) const {
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

template <typename T>
void Plan<T>::inverse(std::complex<T>* data) const {
  if (pow2_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
}

template <typename T>
void dft2(std::complex<T>* data, int h, int w, bool inverse) {
  const Plan<T> row_plan(static_cast<std::size_t>(w));
  const Plan<T> col_plan(static_cast<std::size_t>(h));

#pragma omp parallel for schedule(static) if (h > 4)
  for (int r = 0; r < h; ++r) {
    std::complex<T>* row = data + static_cast<std::size_t>(r) * w;
    if (inverse) {
      row_plan.inverse(row);
    } else {
      row_plan.forward(row);
    }
  }

#pragma omp parallel for schedule(static) if (w > 4)
  for (int c = 0; c < w; ++c) {
    std::vector<std::complex<T>> col(static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) col[r] = data[static_cast<std::size_t>(r) * w + c];
    if (inverse) {
      col_plan.inverse(col.data());
    } else {
      col_plan.forward(col.data());
    }
    for (int r = 0; r < h; ++r) data[static_cast<std::size_t>(r) * w + c] = col[r];
  }
}

namespace {

// dst[(r + dr) % h][(c + dc) % w] = src[r][c]
template <typename T>
void roll2(const std::complex<T>* src, std::complex<T>* dst, int h, int w, int dr, int dc) {
  dr %= h;
  dc %= w;
  for (int r = 0; r < h; ++r) {
    const int rr = (r + dr) % h;
    for (int c = 0; c < w; ++c) {
      const int cc = (c + dc) % w;
      dst[static_cast<std::size_t>(rr) * w + cc] = src[static_cast<std::size_t>(r) * w + c];
    }
  }
}

// fftshift rolls by floor(n/2); ifftshift by ceil(n/2). Identical for even n.
template <typename T>
void centered2(const std::complex<T>* in, std::complex<T>* out, int h, int w, bool inverse) {
  std::vector<std::complex<T>> buf(static_cast<std::size_t>(h) * w);
  roll2(in, buf.data(), h, w, h - h / 2, w - w / 2);  // ifftshift
  dft2(buf.data(), h, w, inverse);
  std::vector<std::complex<T>> shifted(buf.size());
  roll2(buf.data(), shifted.data(), h, w, h / 2, w / 2);  // fftshift
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(h) * w));
  for (std::size_t i = 0; i < shifted.size(); ++i) out[i] = shifted[i] * scale;
}

}  // namespace

template <typename T>
void fft2c(const std::complex<T>* in, std::complex<T>* out, int h, int w) {
  centered2(in, out, h, w, false);
}

template <typename T>
void ifft2c(const std::complex<T>* in, std::complex<T>* out, int h, int w) {
  centered2(in, out, h, w, true);
}

template class Plan<float>;
template class Plan<double>;
template void dft2<float>(std::complex<float>*, int, int, bool);
template void dft2<double>(std::complex<double>*, int, int, bool);
template void fft2c<float>(const std::complex<float>*, std::complex<float>*, int, int);
template void fft2c<double>(const std::complex<double>*, std::complex<double>*, int, int);
template void ifft2c<float>(const std::complex<float>*, std::complex<float>*, int, int);
template void ifft2c<double>(const std::complex<double>*, std::complex<double>*, int, int);

}  // namespace umri::fft
