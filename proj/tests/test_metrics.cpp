#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "umri/metrics/metrics.hpp"

using namespace umri;
using testsup::random_vec;

TEST_CASE("ssim is exactly 1 on identical images and symmetric on random pairs") {
  Rng rng(41);
  auto x = random_vec(32 * 32, rng, 0.0, 1.0);
  CHECK(metrics::ssim(x, x, 32, 32, 1.0) == 1.0);

  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_vec(16 * 16, rng, 0.0, 1.0);
    auto b = random_vec(16 * 16, rng, 0.0, 1.0);
    CHECK(metrics::ssim(a, b, 16, 16, 1.0) ==
          doctest::Approx(metrics::ssim(b, a, 16, 16, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("ssim zero-variance closed form for constant images") {
  const double c1v = 0.4, c2v = 0.7, range = 1.0;
  std::vector<double> a(10 * 10, c1v), b(10 * 10, c2v);
  const double c1 = 0.01 * 0.01;
  const double expect = (2 * c1v * c2v + c1) / (c1v * c1v + c2v * c2v + c1);
  CHECK(metrics::ssim(a, b, 10, 10, range) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ssim stays within [-1, 1] on adversarial random pairs") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_vec(12 * 12, rng, -3.0, 3.0);
    auto b = random_vec(12 * 12, rng, -3.0, 3.0);
    const double s = metrics::ssim(a, b, 12, 12, 6.0);
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);
  }
}

TEST_CASE("psnr closed forms") {
  Rng rng(43);
  auto x = random_vec(64, rng, 0.0, 1.0);
  CHECK(std::isinf(metrics::psnr(x, x, 1.0)));

  const double delta = 0.125;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + delta;
  const double p1 = metrics::psnr(x, y, 1.0);
  CHECK(p1 == doctest::Approx(10.0 * std::log10(1.0 / (delta * delta))).epsilon(1e-12));

  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + delta / 2;
  const double p2 = metrics::psnr(x, y, 1.0);
  CHECK(p2 - p1 == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));
}

TEST_CASE("psnr monotonically decreases as the error grows") {
  Rng rng(44);
  auto x = random_vec(128, rng, 0.0, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + delta;
    const double p = metrics::psnr(x, y, 1.0);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("nmse closed forms and scale covariance") {
  Rng rng(45);
  auto t = random_vec(64, rng, 0.5, 1.5);
  CHECK(metrics::nmse(t, t) == 0.0);

  std::vector<double> zero(t.size(), 0.0);
  CHECK(metrics::nmse(zero, t) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> twice(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) twice[i] = 2.0 * t[i];
  CHECK(metrics::nmse(twice, t) == doctest::Approx(1.0).epsilon(1e-12));

  auto r = random_vec(64, rng, 0.0, 1.0);
  const double base = metrics::nmse(r, t);
  std::vector<double> ra(r.size()), ta(t.size());
  const double alpha = -2.7;
  for (std::size_t i = 0; i < r.size(); ++i) {
    ra[i] = alpha * r[i];
    ta[i] = alpha * t[i];
  }
  CHECK(metrics::nmse(ra, ta) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("metric aggregates equal the mean of per-sample values") {
  std::vector<metrics::MetricSample> samples = {
      {0.8, 30.0, 0.1}, {0.9, 34.0, 0.05}, {0.7, 28.0, 0.2}};
  const auto agg = metrics::aggregate(samples);
  CHECK(agg.count == 3);
  CHECK(agg.mean.ssim == doctest::Approx((0.8 + 0.9 + 0.7) / 3).epsilon(1e-12));
  CHECK(agg.mean.psnr == doctest::Approx((30.0 + 34.0 + 28.0) / 3).epsilon(1e-12));
  CHECK(agg.mean.nmse == doctest::Approx((0.1 + 0.05 + 0.2) / 3).epsilon(1e-12));
}

TEST_CASE("differentiable ssim matches the plain metric") {
  Rng rng(46);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 16;
    auto x = random_vec(n * n, rng, 0.0, 1.0);
    auto y = random_vec(n * n, rng, 0.0, 1.0);
    const double plain = metrics::ssim(x, y, n, n, 1.0);
    Tensor<double> xt = Tensor<double>::constant({n, n}, std::vector<double>(x));
    Tensor<double> yt = Tensor<double>::constant({n, n}, std::vector<double>(y));
    const double graph = metrics::ssim_t(xt, yt, 1.0).value()[0];
    CHECK(graph == doctest::Approx(plain).epsilon(1e-9));
  }
}

TEST_CASE("ssim loss: zero at identity with zero gradient, FD check elsewhere") {
  Rng rng(47);
  const int n = 12;
  auto base = random_vec(n * n, rng, 0.1, 0.9);

  Tensor<double> x = Tensor<double>::param({n, n}, std::vector<double>(base));
  Tensor<double> t = Tensor<double>::constant({n, n}, std::vector<double>(base));
  Tensor<double> loss = metrics::ssim_loss(x, t, 1.0);
  CHECK(std::abs(loss.value()[0]) < 1e-12);
  GradMap<double> g = backward(loss);
  for (double v : g.at(x.node())) CHECK(std::abs(v) < 1e-8);  // stationary at the maximum

  // gradients flow to recon and match finite differences
  Tensor<double> xr = testsup::random_tensor({n, n}, rng, true, 0.0, 1.0);
  Tensor<double> tr = testsup::random_tensor({n, n}, rng, false, 0.0, 1.0);
  const auto r = testsup::grad_check([&] { return metrics::ssim_loss(xr, tr, 1.0); }, xr);
  CHECK(r.max_rel_err < 1e-4);

  // the target is a constant; no gradient entry appears for it
  CHECK(g.count(t.node()) == 0);
}

TEST_CASE("metric argument validation") {
  std::vector<double> a(16, 0.5), b(9, 0.5);
  CHECK_THROWS_AS((void)metrics::ssim(a, b, 4, 4, 1.0), ShapeError);
  CHECK_THROWS_AS((void)metrics::ssim(a, a, 4, 4, 0.0), ShapeError);
  CHECK_THROWS_AS((void)metrics::ssim(a, a, 4, 4, -1.0), ShapeError);
  CHECK_THROWS_AS((void)metrics::psnr(a, b, 1.0), ShapeError);
  CHECK_THROWS_AS((void)metrics::nmse(a, b), ShapeError);
}
