#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "test_support.hpp"
#include "umri/core/fft.hpp"
#include "umri/core/kernels.hpp"

using namespace umri;

namespace {

std::vector<std::complex<double>> random_complex(std::size_t n, Rng& rng) {
  std::vector<std::complex<double>> v(n);
  for (auto& z : v) z = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

double max_abs_diff(const std::vector<std::complex<double>>& a,
                    const std::vector<std::complex<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("fft2c matches the direct DFT oracle on assorted sizes") {
  Rng rng(11);
  for (auto [h, w] : {std::pair{4, 4}, {8, 8}, {16, 16}, {8, 12}, {6, 10}, {7, 9}, {5, 16}}) {
    auto in = random_complex(static_cast<std::size_t>(h) * w, rng);
    std::vector<std::complex<double>> out(in.size());
    fft::fft2c(in.data(), out.data(), h, w);
    auto expect = testsup::dft2c_oracle(in, h, w, -1);
    CAPTURE(h);
    CAPTURE(w);
    CHECK(max_abs_diff(out, expect) < 1e-12);

    fft::ifft2c(in.data(), out.data(), h, w);
    expect = testsup::dft2c_oracle(in, h, w, +1);
    CHECK(max_abs_diff(out, expect) < 1e-12);
  }
}

TEST_CASE("fft2c of a centered unit impulse is flat") {
  const int n = 4;
  std::vector<std::complex<double>> in(n * n, {0, 0});
  in[(n / 2) * n + n / 2] = {1, 0};
  std::vector<std::complex<double>> out(in.size());
  fft::fft2c(in.data(), out.data(), n, n);
  for (const auto& z : out) CHECK(std::abs(z - std::complex<double>(0.25, 0.0)) < 1e-14);
}

TEST_CASE("fft2c and ifft2c are mutual inverses up to 64x64") {
  Rng rng(12);
  for (int n : {8, 16, 32, 64}) {
    auto in = random_complex(static_cast<std::size_t>(n) * n, rng);
    std::vector<std::complex<double>> k(in.size()), back(in.size());
    fft::fft2c(in.data(), k.data(), n, n);
    fft::ifft2c(k.data(), back.data(), n, n);
    CHECK(max_abs_diff(in, back) < 1e-10);
    fft::ifft2c(in.data(), k.data(), n, n);
    fft::fft2c(k.data(), back.data(), n, n);
    CHECK(max_abs_diff(in, back) < 1e-10);
  }
}

TEST_CASE("fft2c preserves the norm and is linear") {
  Rng rng(13);
  const int n = 32;
  auto x = random_complex(static_cast<std::size_t>(n) * n, rng);
  auto y = random_complex(x.size(), rng);
  std::vector<std::complex<double>> fx(x.size()), fy(x.size()), fz(x.size());
  fft::fft2c(x.data(), fx.data(), n, n);
  fft::fft2c(y.data(), fy.data(), n, n);

  double nx = 0, nfx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nx += std::norm(x[i]);
    nfx += std::norm(fx[i]);
  }
  CHECK(std::abs(std::sqrt(nx) - std::sqrt(nfx)) / std::sqrt(nx) < 1e-9);

  const std::complex<double> alpha{0.7, -0.3}, beta{-1.2, 0.4};
  std::vector<std::complex<double>> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = alpha * x[i] + beta * y[i];
  fft::fft2c(z.data(), fz.data(), n, n);
  double err = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    err = std::max(err, std::abs(fz[i] - (alpha * fx[i] + beta * fy[i])));
  CHECK(err < 1e-10);
}

TEST_CASE("parallel kernels agree bitwise with the serial references") {
  Rng rng(14);
  SUBCASE("conv2d") {
    const int n = 2, ci = 3, h = 13, w = 11, co = 4, k = 3;
    for (auto [stride, pad] : {std::pair{1, 1}, {2, 0}, {1, 0}, {2, 1}}) {
      auto in = testsup::random_vec(static_cast<std::size_t>(n) * ci * h * w, rng);
      auto wt = testsup::random_vec(static_cast<std::size_t>(co) * ci * k * k, rng);
      auto bias = testsup::random_vec(co, rng);
      const int oh = (h + 2 * pad - k) / stride + 1;
      const int ow = (w + 2 * pad - k) / stride + 1;
      std::vector<double> a(static_cast<std::size_t>(n) * co * oh * ow), b(a.size());
      kernels::conv2d_forward(in.data(), n, ci, h, w, wt.data(), co, k, k, bias.data(), stride,
                              pad, a.data());
      kernels::serial::conv2d_forward(in.data(), n, ci, h, w, wt.data(), co, k, k, bias.data(),
                                      stride, pad, b.data());
      CHECK(a == b);
    }
  }
  SUBCASE("depthwise") {
    const int n = 2, c = 5, h = 9, w = 14, k = 3;
    auto in = testsup::random_vec(static_cast<std::size_t>(n) * c * h * w, rng);
    auto wt = testsup::random_vec(static_cast<std::size_t>(c) * k * k, rng);
    std::vector<double> a(in.size()), b(in.size());
    kernels::depthwise_forward(in.data(), n, c, h, w, wt.data(), k, k, static_cast<const double*>(nullptr), 1, a.data());
    kernels::serial::depthwise_forward(in.data(), n, c, h, w, wt.data(), k, k, static_cast<const double*>(nullptr), 1,
                                       b.data());
    CHECK(a == b);
  }
  SUBCASE("matmul") {
    const int m = 17, k = 23, n = 9;
    auto a = testsup::random_vec(static_cast<std::size_t>(m) * k, rng);
    auto b = testsup::random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
    kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
    kernels::serial::matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);
  }
  SUBCASE("bilinear") {
    const int n = 1, c = 3, h = 7, w = 9, oh = 15, ow = 4;
    auto in = testsup::random_vec(static_cast<std::size_t>(n) * c * h * w, rng);
    std::vector<double> a(static_cast<std::size_t>(n) * c * oh * ow), b(a.size());
    kernels::bilinear_forward(in.data(), n, c, h, w, oh, ow, a.data());
    kernels::serial::bilinear_forward(in.data(), n, c, h, w, oh, ow, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("conv2d kernel matches the nested-loop oracle") {
  Rng rng(15);
  const int n = 1, ci = 2, h = 6, w = 6, co = 3, k = 3, stride = 1, pad = 1;
  auto in = testsup::random_vec(static_cast<std::size_t>(n) * ci * h * w, rng);
  auto wt = testsup::random_vec(static_cast<std::size_t>(co) * ci * k * k, rng);
  auto bias = testsup::random_vec(co, rng);
  std::vector<double> out(static_cast<std::size_t>(n) * co * h * w);
  kernels::conv2d_forward(in.data(), n, ci, h, w, wt.data(), co, k, k, bias.data(), stride, pad,
                          out.data());
  auto expect = testsup::conv2d_oracle(in, n, ci, h, w, wt, co, k, k, bias, stride, pad);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - expect[i]) < 1e-6);
}
