#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace umri::fft {

// 1D transform plan for a fixed length. Power-of-two lengths run an iterative
// radix-2 FFT; other lengths go through Bluestein's chirp-z reduction to a
// padded power-of-two convolution. Twiddles are evaluated with double trig
// regardless of T.
template <typename T>
class Plan {
 public:
  explicit Plan(std::size_t n);

  std::size_t size() const { return n_; }

  // unnormalized DFT, sign = -1 in the exponent
  void forward(std::complex<T>* data) const;
  // unnormalized inverse DFT, sign = +1, no 1/n factor
  void inverse(std::complex<T>* data) const;

 private:
  void radix2(std::complex<T>* data, bool inverse) const;
  void bluestein(std::complex<T>* data, bool inverse) const;

  std::size_t n_ = 0;
  bool pow2_ = false;
  std::vector<std::complex<T>> twiddle_;       // exp(-2*pi*i*j/n), j < n/2 (pow2 path)
  std::vector<std::size_t> bitrev_;            // pow2 path
  // Bluestein tables
  std::size_t m_ = 0;                          // padded length (power of two)
  std::vector<std::complex<T>> chirp_;         // exp(+i*pi*j^2/n), j < n
  std::vector<std::complex<T>> chirp_fft_;     // FFT of the padded chirp
  std::vector<std::complex<T>> m_twiddle_;
  std::vector<std::size_t> m_bitrev_;
};

// In-place unnormalized 2D DFT over row-major h x w data; parallel over rows.
template <typename T>
void dft2(std::complex<T>* data, int h, int w, bool inverse);

// Centered orthonormal 2D transforms: ifftshift -> DFT -> fftshift with
// 1/sqrt(h*w) scaling in both directions, so both maps are unitary and
// mutually inverse. Zero frequency sits at (h/2, w/2).
template <typename T>
void fft2c(const std::complex<T>* in, std::complex<T>* out, int h, int w);
template <typename T>
void ifft2c(const std::complex<T>* in, std::complex<T>* out, int h, int w);

}  // namespace umri::fft
