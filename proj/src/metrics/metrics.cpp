#include "umri/metrics/metrics.hpp"

#include <cmath>
#include <limits>

#include "umri/nn/ops.hpp"

namespace umri::metrics {

double ssim(const std::vector<double>& x, const std::vector<double>& y, int h, int w,
            double data_range, const SsimOptions& opts) {
  if (x.size() != y.size() || x.size() != static_cast<std::size_t>(h) * w)
    throw ShapeError("ssim: image shapes do not match");
  if (data_range <= 0.0) throw ShapeError("ssim: data_range must be positive");
  const int win = opts.window;
  if (h < win || w < win) throw ShapeError("ssim: image smaller than the window");

  const double c1 = (opts.k1 * data_range) * (opts.k1 * data_range);
  const double c2 = (opts.k2 * data_range) * (opts.k2 * data_range);
  const int n = win * win;
  const double inv_n = 1.0 / n;
  const double cov_norm = static_cast<double>(n) / (n - 1);

  double total = 0.0;
  int count = 0;
  for (int r = 0; r + win <= h; ++r) {
    for (int c = 0; c + win <= w; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i) {
        const double* xr = x.data() + static_cast<std::size_t>(r + i) * w + c;
        const double* yr = y.data() + static_cast<std::size_t>(r + i) * w + c;
        for (int j = 0; j < win; ++j) {
          sx += xr[j];
          sy += yr[j];
          sxx += xr[j] * xr[j];
          syy += yr[j] * yr[j];
          sxy += xr[j] * yr[j];
        }
      }
      const double ux = sx * inv_n;
      const double uy = sy * inv_n;
      const double vx = (sxx * inv_n - ux * ux) * cov_norm;
      const double vy = (syy * inv_n - uy * uy) * cov_norm;
      const double cov = (sxy * inv_n - ux * uy) * cov_norm;
      const double a1 = 2.0 * ux * uy + c1;
      const double a2 = 2.0 * cov + c2;
      const double b1 = ux * ux + uy * uy + c1;
      const double b2 = vx + vy + c2;
      total += (a1 * a2) / (b1 * b2);
      ++count;
    }
  }
  return total / count;
}

double psnr(const std::vector<double>& x, const std::vector<double>& y, double max_val) {
  if (x.size() != y.size()) throw ShapeError("psnr: size mismatch");
  if (max_val <= 0.0) throw ShapeError("psnr: max_val must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double nmse(const std::vector<double>& recon, const std::vector<double>& target) {
  if (recon.size() != target.size()) throw ShapeError("nmse: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon[i] - target[i];
    num += d * d;
    den += target[i] * target[i];
  }
  if (den == 0.0) throw DataError("nmse: zero target");
  return num / den;
}

MetricAggregate aggregate(const std::vector<MetricSample>& samples) {
  MetricAggregate agg;
  agg.count = static_cast<int>(samples.size());
  if (samples.empty()) return agg;
  for (const auto& s : samples) {
    agg.mean.ssim += s.ssim;
    agg.mean.psnr += s.psnr;
    agg.mean.nmse += s.nmse;
  }
  const double n = static_cast<double>(samples.size());
  agg.mean.ssim /= n;
  agg.mean.psnr /= n;
  agg.mean.nmse /= n;
  for (const auto& s : samples) {
    agg.stddev.ssim += (s.ssim - agg.mean.ssim) * (s.ssim - agg.mean.ssim);
    agg.stddev.psnr += (s.psnr - agg.mean.psnr) * (s.psnr - agg.mean.psnr);
    agg.stddev.nmse += (s.nmse - agg.mean.nmse) * (s.nmse - agg.mean.nmse);
  }
  agg.stddev.ssim = std::sqrt(agg.stddev.ssim / n);
  agg.stddev.psnr = std::sqrt(agg.stddev.psnr / n);
  agg.stddev.nmse = std::sqrt(agg.stddev.nmse / n);
  return agg;
}

template <typename T>
Tensor<T> ssim_t(const Tensor<T>& recon, const Tensor<T>& target, double data_range,
                 const SsimOptions& opts) {
  if (recon.rank() != 2 || target.rank() != 2 || recon.shape() != target.shape())
    throw ShapeError("ssim_t: expected matching (H,W) tensors");
  if (data_range <= 0.0) throw ShapeError("ssim_t: data_range must be positive");
  const int h = recon.dim(0), w = recon.dim(1);
  const int win = opts.window;
  if (h < win || w < win) throw ShapeError("ssim_t: image smaller than the window");

  const double c1 = (opts.k1 * data_range) * (opts.k1 * data_range);
  const double c2 = (opts.k2 * data_range) * (opts.k2 * data_range);
  const int n = win * win;
  const double cov_norm = static_cast<double>(n) / (n - 1);

  // mean filter as a fixed-weight valid convolution
  Tensor<T> box = Tensor<T>::constant(
      {1, 1, win, win}, std::vector<T>(static_cast<std::size_t>(n), static_cast<T>(1.0 / n)));
  Tensor<T> none;
  auto filt = [&](const Tensor<T>& img) {
    return ops::conv2d(img, box, none, 1, 0);
  };

  Tensor<T> x = ops::reshape(recon, {1, 1, h, w});
  Tensor<T> y = ops::reshape(target, {1, 1, h, w});
  Tensor<T> ux = filt(x);
  Tensor<T> uy = filt(y);
  Tensor<T> uxx = filt(ops::mul(x, x));
  Tensor<T> uyy = filt(ops::mul(y, y));
  Tensor<T> uxy = filt(ops::mul(x, y));

  Tensor<T> vx = ops::scale(ops::sub(uxx, ops::mul(ux, ux)), cov_norm);
  Tensor<T> vy = ops::scale(ops::sub(uyy, ops::mul(uy, uy)), cov_norm);
  Tensor<T> cov = ops::scale(ops::sub(uxy, ops::mul(ux, uy)), cov_norm);

  Tensor<T> a1 = ops::add_const(ops::scale(ops::mul(ux, uy), 2.0), c1);
  Tensor<T> a2 = ops::add_const(ops::scale(cov, 2.0), c2);
  Tensor<T> b1 = ops::add_const(ops::add(ops::mul(ux, ux), ops::mul(uy, uy)), c1);
  Tensor<T> b2 = ops::add_const(ops::add(vx, vy), c2);

  Tensor<T> ssim_map = ops::div(ops::mul(a1, a2), ops::mul(b1, b2));
  return ops::mean_all(ssim_map);
}

template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& recon, const Tensor<T>& target, double data_range,
                    const SsimOptions& opts) {
  return ops::add_const(ops::scale(ssim_t(recon, target, data_range, opts), -1.0), 1.0);
}

template Tensor<float> ssim_t<float>(const Tensor<float>&, const Tensor<float>&, double,
                                     const SsimOptions&);
template Tensor<double> ssim_t<double>(const Tensor<double>&, const Tensor<double>&, double,
                                       const SsimOptions&);
template Tensor<float> ssim_loss<float>(const Tensor<float>&, const Tensor<float>&, double,
                                        const SsimOptions&);
template Tensor<double> ssim_loss<double>(const Tensor<double>&, const Tensor<double>&, double,
                                          const SsimOptions&);

}  // namespace umri::metrics
