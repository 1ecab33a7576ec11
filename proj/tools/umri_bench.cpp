// Kernel benchmark: OpenMP-parallel kernels against the serial references.
#include <omp.h>

#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <vector>

#include "umri/core/fft.hpp"
#include "umri/core/kernels.hpp"
#include "umri/core/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<float> random_vec(std::size_t n, umri::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
  umri::Rng rng(42);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  {
    const int n = 4, ci = 32, h = 64, w = 64, co = 32, k = 3;
    auto in = random_vec(static_cast<std::size_t>(n) * ci * h * w, rng);
    auto wt = random_vec(static_cast<std::size_t>(co) * ci * k * k, rng);
    auto bias = random_vec(co, rng);
    std::vector<float> out(static_cast<std::size_t>(n) * co * h * w);
    row("conv2d 4x32x64x64 k3",
        time_ms([&] {
          umri::kernels::serial::conv2d_forward(in.data(), n, ci, h, w, wt.data(), co, k, k,
                                                bias.data(), 1, 1, out.data());
        }, 3),
        time_ms([&] {
          umri::kernels::conv2d_forward(in.data(), n, ci, h, w, wt.data(), co, k, k, bias.data(),
                                        1, 1, out.data());
        }, 3));
  }

  {
    const int n = 4, c = 64, h = 64, w = 64, k = 3;
    auto in = random_vec(static_cast<std::size_t>(n) * c * h * w, rng);
    auto wt = random_vec(static_cast<std::size_t>(c) * k * k, rng);
    std::vector<float> out(in.size());
    row("depthwise 4x64x64x64 k3",
        time_ms([&] {
          umri::kernels::serial::depthwise_forward(in.data(), n, c, h, w, wt.data(), k, k,
                                                   static_cast<const float*>(nullptr), 1, out.data());
        }, 5),
        time_ms([&] {
          umri::kernels::depthwise_forward(in.data(), n, c, h, w, wt.data(), k, k,
                                           static_cast<const float*>(nullptr), 1, out.data());
        }, 5));
  }

  {
    const int m = 512, k = 512, n = 512;
    auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<float> c(static_cast<std::size_t>(m) * n);
    row("matmul 512^3",
        time_ms([&] { umri::kernels::serial::matmul(a.data(), b.data(), c.data(), m, k, n); }, 3),
        time_ms([&] { umri::kernels::matmul(a.data(), b.data(), c.data(), m, k, n); }, 3));
  }

  {
    const int n = 8, c = 16, h = 32, w = 32, oh = 128, ow = 128;
    auto in = random_vec(static_cast<std::size_t>(n) * c * h * w, rng);
    std::vector<float> out(static_cast<std::size_t>(n) * c * oh * ow);
    row("bilinear 32->128",
        time_ms([&] {
          umri::kernels::serial::bilinear_forward(in.data(), n, c, h, w, oh, ow, out.data());
        }, 5),
        time_ms([&] {
          umri::kernels::bilinear_forward(in.data(), n, c, h, w, oh, ow, out.data());
        }, 5));
  }

  {
    const int h = 256, w = 256;
    std::vector<std::complex<float>> in(static_cast<std::size_t>(h) * w), out(in.size());
    for (auto& z : in)
      z = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))};
    // the 2D transform is row/column parallel internally; compare 1 thread vs all
    const int max_threads = omp_get_max_threads();
    const double serial = time_ms([&] {
      omp_set_num_threads(1);
      umri::fft::fft2c(in.data(), out.data(), h, w);
    }, 10);
    const double parallel = time_ms([&] {
      omp_set_num_threads(max_threads);
      umri::fft::fft2c(in.data(), out.data(), h, w);
    }, 10);
    omp_set_num_threads(max_threads);
    row("fft2c 256x256", serial, parallel);
  }

  return 0;
}
