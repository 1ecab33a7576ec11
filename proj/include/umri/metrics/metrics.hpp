#pragma once

#include <vector>

#include "umri/nn/tensor.hpp"

namespace umri::metrics {

// Uniform-window SSIM in the usual MRI-benchmark configuration: 7x7 window
// over valid positions only, k1=0.01, k2=0.03, unbiased covariance
// normalization n/(n-1).
struct SsimOptions {
  int window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Reporting cap substituted for an infinite PSNR in CSV output.
inline constexpr double kPsnrCap = 99.0;

double ssim(const std::vector<double>& x, const std::vector<double>& y, int h, int w,
            double data_range, const SsimOptions& opts = {});

// 10 log10(max_val^2 / MSE); +infinity when the images are identical
double psnr(const std::vector<double>& x, const std::vector<double>& y, double max_val);

// ||recon - target||^2 / ||target||^2
double nmse(const std::vector<double>& recon, const std::vector<double>& target);

struct MetricSample {
  double ssim = 0.0;
  double psnr = 0.0;
  double nmse = 0.0;
};

struct MetricAggregate {
  MetricSample mean;
  MetricSample stddev;
  int count = 0;
};

MetricAggregate aggregate(const std::vector<MetricSample>& samples);

// Differentiable counterparts on (H,W) tensors; numerically match the plain
// versions and let gradients flow to `recon`.
template <typename T>
Tensor<T> ssim_t(const Tensor<T>& recon, const Tensor<T>& target, double data_range,
                 const SsimOptions& opts = {});

// 1 - ssim
template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& recon, const Tensor<T>& target, double data_range,
                    const SsimOptions& opts = {});

}  // namespace umri::metrics
